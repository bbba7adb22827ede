// Acceptance gate: runs criteria 1-11 and prints one PASS/FAIL line each.
// `acceptance 3 5` runs a subset. Exit status is nonzero if any selected
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mpcc/agent/action_space.hpp"
#include "mpcc/agent/dqn.hpp"
#include "mpcc/bench/csv.hpp"
#include "mpcc/bench/experiments.hpp"
#include "mpcc/bench/metrics.hpp"
#include "mpcc/bench/runner.hpp"
#include "mpcc/datapath/scheduler.hpp"
#include "mpcc/netsim/rng.hpp"
#include "mpcc/reward/reward.hpp"
#include "pomdp.hpp"

using namespace mpcc;
using bench::RunOptions;
using bench::ScenarioConfig;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[fail: " << what << "] ";
    }
  }
};

std::string fmt(double v, int prec = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

double rel_err(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

// ---------------------------------------------------------------------------
// Scenarios and trained agents shared by criteria 6-11.

// 2 x 20 Mbps, 5.5 ms one way (BDP about 18 packets per path).
ScenarioConfig desk(const std::string& cc, double duration_s = 20.0) {
  ScenarioConfig c;
  c.cc = cc;
  c.duration_s = duration_s;
  c.record_series = false;
  for (auto& l : c.links) {
    l.rate_mbps = 20;
    l.prop_delay_ms = 5.5;
  }
  return c;
}

// Square wave 8 <-> 10 Mbps per link with a seed-dependent phase per link.
ScenarioConfig fluctuating(std::uint64_t seed, double duration_s = 10.0) {
  constexpr std::int64_t kPeriodUs = 1'000'000;
  constexpr std::int64_t kPropUs = 10'000;
  ScenarioConfig c;
  c.cc = "dtqn";
  c.duration_s = duration_s;
  c.seed = seed;
  c.record_series = false;
  netsim::Rng rng(netsim::derive_seed(seed, {netsim::streams::kWorkload, 7}));
  for (auto& l : c.links) {
    l.rate_mbps = 10;
    l.prop_delay_ms = kPropUs / 1000.0;
    bool high = rng.bernoulli(0.5);
    l.trace.push_back({netsim::SimTime(0), high ? 10e6 : 8e6, kPropUs});
    const auto end = static_cast<std::int64_t>(duration_s * 1e6);
    for (auto t = static_cast<std::int64_t>(rng.below(kPeriodUs)); t <= end; t += kPeriodUs) {
      high = !high;
      l.trace.push_back({netsim::SimTime(t), high ? 10e6 : 8e6, kPropUs});
    }
  }
  return c;
}

double goodput(const ScenarioConfig& c, agent::DqnAgent* a = nullptr, bench::RunResult* out = nullptr) {
  RunOptions opt;
  opt.agent = a;
  opt.training = false;
  auto r = bench::run_scenario(c, opt);
  const double g = r.metrics.goodput_bps;
  if (out) *out = std::move(r);
  return g;
}

constexpr int kTrainEveryAgent = 4;

void train_on(agent::DqnAgent& a, const std::vector<ScenarioConfig>& episodes, const char* tag) {
  const auto t0 = Clock::now();
  RunOptions opt;
  opt.agent = &a;
  opt.training = true;
  double last = 0;
  for (const auto& e : episodes) last = bench::run_scenario(e, opt).metrics.goodput_bps;
  std::printf("  (%s agent: %zu episodes, %lld gradient steps, last episode %.2f Mbps, %.0f s)\n", tag,
              episodes.size(), static_cast<long long>(a.train_steps()), last / 1e6, seconds_since(t0));
  std::fflush(stdout);
}

// Trained on the desk paths with episodes cycling through lossless, 1% loss,
// a shallow and a deep buffer.
agent::DqnAgent& desk_agent() {
  static std::unique_ptr<agent::DqnAgent> a;
  if (a) return *a;
  ScenarioConfig base = desk("dtqn", 10.0);
  base.agent.train_every = kTrainEveryAgent;
  a = bench::make_agent(base);
  std::vector<ScenarioConfig> eps;
  for (int e = 0; e < 32; ++e) {
    ScenarioConfig c = base;
    c.seed = netsim::derive_seed(500, {netsim::streams::kAgent, 100, static_cast<std::uint64_t>(e)});
    switch (e % 4) {
      case 1:
        for (auto& l : c.links) l.loss = 0.01;
        break;
      case 2:
        for (auto& l : c.links) l.buffer_bdp = 0.6;
        break;
      case 3:
        for (auto& l : c.links) l.buffer_bdp = 3.0;
        break;
      default:
        break;
    }
    eps.push_back(c);
  }
  train_on(*a, eps, "desk");
  return *a;
}

agent::DqnAgent& fluctuating_agent() {
  static std::unique_ptr<agent::DqnAgent> a;
  if (a) return *a;
  ScenarioConfig base = fluctuating(1);
  base.agent.train_every = kTrainEveryAgent;
  a = bench::make_agent(base);
  std::vector<ScenarioConfig> eps;
  for (int e = 0; e < 24; ++e) eps.push_back(fluctuating(100 + static_cast<std::uint64_t>(e)));
  train_on(*a, eps, "fluctuating");
  return *a;
}

// ---------------------------------------------------------------------------

Outcome scheduler_oracle() {
  Outcome o;
  const auto t0 = Clock::now();
  netsim::Rng rng(2024);
  int mismatches = 0;
  const int trials = 10000;
  for (int k = 0; k < trials; ++k) {
    const int m = 1 + static_cast<int>(rng.below(6));
    std::vector<datapath::SubflowState> s(static_cast<std::size_t>(m));
    for (auto& x : s) {
      x.cwnd_pkts = 1 + static_cast<int>(rng.below(40));
      x.queued_pkts = static_cast<int>(rng.below(10));
      x.inflight_pkts = static_cast<int>(rng.below(40));
      x.mode = rng.bernoulli(0.25) ? datapath::Mode::kRecovery : datapath::Mode::kOpen;
      x.srtt_us = 1000 * static_cast<std::int64_t>(1 + rng.below(6));
    }
    // Filter by availability, then take the first minimum RTT.
    std::vector<int> eligible;
    for (int i = 0; i < m; ++i) {
      const auto& x = s[static_cast<std::size_t>(i)];
      if (x.mode == datapath::Mode::kOpen && x.cwnd_pkts - (x.queued_pkts + x.inflight_pkts) > 0) eligible.push_back(i);
    }
    int expect = -1;
    for (int i : eligible) {
      if (expect < 0 || s[static_cast<std::size_t>(i)].srtt_us < s[static_cast<std::size_t>(expect)].srtt_us) expect = i;
    }
    if (datapath::pick_subflow(s).value_or(-1) != expect) ++mismatches;
  }
  const double dt = seconds_since(t0);
  o.require(mismatches == 0, "mismatches");
  o.require(dt < 1.0, "runtime");
  o.detail << trials << " states, " << mismatches << " mismatches, " << fmt(dt) << " s";
  return o;
}

Outcome reward_suite() {
  Outcome o;
  using namespace reward;
  RewardParams p;
  p.beta = 10000;
  p.beta_scale = 0;
  p.g = 0.1;
  p.d_floor_us = 5000;
  p.sigma_us = 1000;
  double worst = 0;
  auto check = [&](double got, double want, const char* what) {
    const double e = rel_err(got, want);
    worst = std::max(worst, e);
    o.require(e <= 1e-9, what);
  };
  check(threshold(5000, p), 2.0, "T(5000)");
  check(threshold(7500, p), 1.6, "T(7500)");
  RewardParams flat = p;
  flat.g = 0;
  flat.d_floor_us = 123;
  flat.sigma_us = 7;
  check(threshold(7500, flat), 10000.0 / 7500.0, "T with g=0");
  const double t = threshold(5000, p);
  o.require(alpha(t * 5000, 5000, p) == 0.5, "alpha at ratio == T");
  RewardParams k2 = p;
  k2.kappa = 2;
  check(alpha((t + 0.5) * 5000, 5000, k2), 1.0 / (1.0 + std::exp(-1.0)), "alpha kappa=2");
  check(alpha((t + 0.5) * 5000, 5000, k2), 0.7310585786300049, "alpha 0.7311");
  RewardParams big = p;
  big.kappa = 1e4;
  o.require(alpha((t + 0.1) * 5000, 5000, big) > 1 - 1e-12, "alpha saturation");
  RewardParams wd = p;
  wd.w_d = 1;
  o.require(rtt_penalty(t * 5000, 5000, wd) == 0.0, "P_D at T");
  check(rtt_penalty((t + 0.4) * 5000, 5000, wd), -0.4, "P_D -0.4");
  o.require(rtt_penalty((t - 0.4) * 5000, 5000, wd) > 0, "P_D below T");
  o.require(tput_reward(0, p) == 0.0, "R_rho(0)");
  check(tput_reward(0.8, p), 0.8, "R_rho(0.8)");
  // Normal branch at alpha = 0.5: R = 0.5 P_D + 0.5 R_rho.
  check(0.5 * -0.4 + 0.5 * 0.8, 0.2, "R = 0.2");
  SubflowStepInput normal{t * 5000, 5000, 0.8, 0, 30, 4, 60, false};
  const auto nr = subflow_reward(normal, p);
  check(nr.r, 0.5 * nr.p_d + 0.5 * 0.8, "normal mix");

  // Exhaustive precedence grid: every joint action, flag on/off, and
  // resulting windows below, at and above both bounds.
  agent::ActionSpace space(2, 2, 2);
  int cases = 0;
  for (int a = 0; a < space.size(); ++a) {
    const auto deltas = space.decode(a);
    for (int sub = 0; sub < 2; ++sub) {
      const int delta = deltas[static_cast<std::size_t>(sub)];
      for (int resulting : {4, 5, 30, 59, 60}) {
        for (bool flag : {false, true}) {
          SubflowStepInput in{7000, 5000, 0.6, delta, resulting, 4, 60, flag};
          const auto r = subflow_reward(in, p);
          double want;
          if (resulting <= 4 || resulting >= 60) {
            want = -1.0;
          } else if (flag) {
            want = delta > 0 ? 1.0 : -1.0;
          } else {
            const double ratio = 7000.0 / 5000.0;
            const double tt = threshold(5000, p);
            const double al = 1.0 / (1.0 + std::exp(-p.kappa * (ratio - tt)));
            want = al * (-p.w_d * (ratio - tt)) + (1 - al) * p.w_rho * 0.6;
          }
          if (rel_err(r.r, want) > 1e-9) o.require(false, "precedence case");
          ++cases;
        }
      }
    }
  }
  // Expflag counter.
  ExpflagTracker ex(6);
  for (int i = 0; i < 6; ++i) ex.on_step(false);
  o.require(ex.flag(), "expflag after 6");
  ExpflagTracker ey(6);
  for (int i = 0; i < 4; ++i) ey.on_step(false);
  ey.on_step(true);
  ey.on_step(false);
  o.require(!ey.flag(), "expflag increase at step 5");
  o.detail << "worst relative error " << worst << ", " << cases << " precedence cases";
  return o;
}

Outcome gradient_correctness() {
  Outcome o;
  const auto t0 = Clock::now();
  agent::TransformerConfig cfg;
  cfg.input_dim = 6;
  cfg.num_actions = 5;
  cfg.context_len = 4;
  cfg.d_model = 8;
  cfg.n_blocks = 2;
  cfg.n_heads = 2;
  cfg.d_ff = 16;
  agent::TransformerQNet net(cfg);
  netsim::Rng rng(77);
  std::vector<double> params(net.num_params());
  net.init(params, rng);
  for (auto& x : params) x += 0.1 * rng.normal();
  agent::ContextBatch in(3, 4, 6);
  for (auto& x : in.x) x = rng.normal();
  std::fill(in.valid.begin(), in.valid.end(), 1);
  in.valid[4] = 0;  // sequence 1 starts one step late
  std::vector<double> q;
  agent::Tape tape;
  net.forward(params, in, q, &tape);
  std::vector<double> w(q.size());
  for (auto& x : w) x = rng.normal();
  auto loss = [&](const std::vector<double>& p) {
    std::vector<double> out;
    net.forward(p, in, out, nullptr);
    double s = 0;
    for (std::size_t i = 0; i < out.size(); ++i) s += w[i] * out[i];
    return s;
  };
  std::vector<double> grad(params.size(), 0.0);
  net.backward(params, tape, w, grad);
  double worst = 0;
  int bad = 0;
  const double h = 1e-5;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto pp = params;
    pp[i] += h;
    const double up = loss(pp);
    pp[i] = params[i] - h;
    const double numeric = (up - loss(pp)) / (2 * h);
    const double scale = std::max(std::abs(numeric), std::abs(grad[i]));
    const double err = scale > 1e-9 ? std::abs(numeric - grad[i]) / scale : 0.0;
    worst = std::max(worst, err);
    if (err > 1e-4) ++bad;
  }
  o.require(bad == 0, "finite differences");
  // Masked future: changing step t moves no row before t.
  int leaks = 0;
  for (int t = 0; t < 4; ++t) {
    auto moved = in;
    for (int c = 0; c < 6; ++c) moved.row(0, t)[c] += 3.0;
    std::vector<double> q2;
    net.forward(params, moved, q2, nullptr);
    for (int r = 0; r < t; ++r) {
      for (int a = 0; a < 5; ++a) {
        if (q2[static_cast<std::size_t>(r * 5 + a)] != q[static_cast<std::size_t>(r * 5 + a)]) ++leaks;
      }
    }
  }
  o.require(leaks == 0, "causal mask");
  const double dt = seconds_since(t0);
  o.require(dt < 60, "runtime");
  o.detail << net.num_params() << " parameters, worst relative error " << worst << ", " << leaks
           << " causal leaks, " << fmt(dt) << " s";
  return o;
}

Outcome bellman() {
  Outcome o;
  agent::MlpQNet net(agent::MlpConfig{2, 2, 4, 1});
  auto head = [&](std::vector<double> b) {
    std::vector<double> p(net.num_params(), 0.0);
    std::copy(b.begin(), b.end(), p.begin() + static_cast<std::ptrdiff_t>(net.param("head.b").offset));
    return p;
  };
  const auto online = head({0.2, 0.7});
  const auto target = head({5.0, 3.0});
  agent::TrajectoryBatch b;
  b.ctx = agent::ContextBatch(3, 1, 2);
  b.next_ctx = agent::ContextBatch(3, 1, 2);
  std::fill(b.ctx.valid.begin(), b.ctx.valid.end(), 1);
  std::fill(b.next_ctx.valid.begin(), b.next_ctx.valid.end(), 1);
  b.actions = {0, 1, 0};
  b.rewards = {1.0, 2.5, -0.5};
  b.dones = {0, 1, 0};
  const auto y = agent::compute_targets(net, online, target, b, 0.9);
  o.require(y[0] == 1.0 + 0.9 * 3.0, "worked 2-action target");
  o.require(std::abs(y[0] - 3.7) < 1e-15, "3.7");
  o.require(y[1] == 2.5, "terminal target");
  const auto y0 = agent::compute_targets(net, online, target, b, 0.0);
  o.require(y0[0] == 1.0 && y0[2] == -0.5, "gamma = 0");

  // B = 2, L = 2, residuals (1, 1, 1, 3) -> 3.
  const std::vector<double> qv{1, 0, 0, 1, 1, 0, 0, 3};
  const std::vector<int> acts{0, 1, 0, 1};
  const std::vector<double> ys{0, 0, 0, 0};
  o.require(agent::td_loss(qv, 2, acts, {1, 1, 1, 1}, ys, nullptr) == 3.0, "td_loss 3");
  o.require(agent::td_loss(qv, 2, acts, {1, 1, 1, 0}, ys, nullptr) == 1.0, "masked td_loss");
  o.require(agent::td_loss(std::vector<double>{2, 0}, 2, {0}, {1}, std::vector<double>{0}, nullptr) == 4.0, "single");

  // Overfit one batch with the default network and optimizer.
  agent::AgentConfig cfg;
  cfg.target_sync = 1 << 30;
  agent::DqnAgent ag(cfg, 12, 25);
  netsim::Rng rng(17);
  agent::TrajectoryBatch fb;
  fb.ctx = agent::ContextBatch(cfg.batch, cfg.context_len, 12);
  fb.next_ctx = agent::ContextBatch(cfg.batch, cfg.context_len, 12);
  for (auto& x : fb.ctx.x) x = rng.normal();
  for (auto& x : fb.next_ctx.x) x = rng.normal();
  std::fill(fb.ctx.valid.begin(), fb.ctx.valid.end(), 1);
  std::fill(fb.next_ctx.valid.begin(), fb.next_ctx.valid.end(), 1);
  for (int r = 0; r < cfg.batch * cfg.context_len; ++r) {
    fb.actions.push_back(static_cast<int>(rng.below(25)));
    fb.rewards.push_back(rng.normal());
    fb.dones.push_back(rng.bernoulli(0.3) ? 1 : 0);
  }
  const double first = ag.train_on(fb).loss;
  double best = first;
  int reached = -1;
  for (int s = 1; s < 100; ++s) {
    best = std::min(best, ag.train_on(fb).loss);
    if (reached < 0 && best < 0.1 * first) reached = s;
  }
  o.require(reached > 0, "overfit within 100 steps");
  o.detail << "y = " << y[0] << ", overfit " << fmt(first, 4) << " -> " << fmt(best, 4) << " (10% at step "
           << reached << ")";
  return o;
}

Outcome partial_observability() {
  Outcome o;
  const auto t0 = Clock::now();
  std::vector<double> dtqn, ddqn;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    agent::AgentConfig a;
    a.seed = seed;
    a.train_every = kTrainEveryAgent;
    dtqn.push_back(testing::train_and_eval_pomdp(a, 300, 200).optimal_rate);
    agent::AgentConfig b = a;
    b.arch = "ddqn";
    b.context_len = 1;
    ddqn.push_back(testing::train_and_eval_pomdp(b, 300, 200).optimal_rate);
  }
  const double dt = seconds_since(t0);
  o.require(*std::min_element(dtqn.begin(), dtqn.end()) >= 0.95, "DTQN optimal rate");
  o.require(*std::max_element(ddqn.begin(), ddqn.end()) < 0.80, "DDQN optimal rate");
  o.require(dt < 300, "runtime");
  o.detail << "DTQN";
  for (double r : dtqn) o.detail << ' ' << fmt(r, 2);
  o.detail << " | DDQN";
  for (double r : ddqn) o.detail << ' ' << fmt(r, 2);
  o.detail << " | " << fmt(dt, 0) << " s";
  return o;
}

double median_retention(const std::string& cc, agent::DqnAgent* a, std::vector<double>* ratios) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ScenarioConfig clean = desk(cc);
    clean.seed = seed;
    ScenarioConfig lossy = clean;
    for (auto& l : lossy.links) l.loss = 0.01;
    ratios->push_back(goodput(lossy, a) / goodput(clean, a));
  }
  return bench::median(*ratios);
}

Outcome loss_robustness() {
  Outcome o;
  const auto t0 = Clock::now();
  std::vector<double> ra, rr, rc;
  const double agent_ret = median_retention("dtqn", &desk_agent(), &ra);
  const double reno_ret = median_retention("reno", nullptr, &rr);
  const double cubic_ret = median_retention("cubic", nullptr, &rc);
  const double dt = seconds_since(t0);
  o.require(agent_ret >= 0.85, "agent retention >= 0.85");
  o.require(reno_ret <= 0.60, "Reno retention <= 0.60");
  o.require(cubic_ret <= 0.60, "CUBIC retention <= 0.60");
  o.require(dt < 1800, "runtime");
  o.detail << "median retention: agent " << fmt(agent_ret) << ", Reno " << fmt(reno_ret) << ", CUBIC "
           << fmt(cubic_ret) << " | " << fmt(dt, 0) << " s";
  return o;
}

Outcome fluctuating_bandwidth() {
  Outcome o;
  auto& a = fluctuating_agent();
  std::vector<double> gains;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    ScenarioConfig every = fluctuating(1000 + seed);
    every.telemetry.invoke_every = 1;
    ScenarioConfig slow = every;
    slow.telemetry.invoke_every = 50;
    gains.push_back(goodput(every, &a) / goodput(slow, &a) - 1.0);
  }
  const double med = bench::median(gains);
  o.require(med >= 0.03, "median gain >= 3%");
  o.detail << "per-window vs 50x interval goodput gain, median " << fmt(100 * med, 2) << "% (seeds";
  for (double g : gains) o.detail << ' ' << fmt(100 * g, 1);
  o.detail << ")";
  return o;
}

Outcome buffer_insensitivity() {
  Outcome o;
  auto ratio = [](const std::string& cc, agent::DqnAgent* a) {
    ScenarioConfig shallow = desk(cc);
    for (auto& l : shallow.links) l.buffer_bdp = 0.6;
    ScenarioConfig deep = desk(cc);
    for (auto& l : deep.links) l.buffer_bdp = 3.0;
    return goodput(shallow, a) / goodput(deep, a);
  };
  const double agent_r = ratio("dtqn", &desk_agent());
  const double cubic_r = ratio("cubic", nullptr);
  o.require(agent_r >= 0.90, "agent ratio >= 0.90");
  o.require(cubic_r < agent_r, "CUBIC ratio strictly lower");
  o.detail << "goodput(0.6 BDP) / goodput(3 BDP): agent " << fmt(agent_r) << ", CUBIC " << fmt(cubic_r);
  return o;
}

Outcome edge_latency() {
  Outcome o;
  auto& a = desk_agent();
  const std::vector<std::int64_t> one_way{0, 1000, 5000, 25000};
  std::vector<double> g;
  std::int64_t checked = 0, off = 0, stalls = 0;
  for (auto lat : one_way) {
    ScenarioConfig c = bench::apply_axis(desk("dtqn"), bench::SweepAxis::kEdgeLatency, static_cast<double>(lat));
    std::vector<double> per_seed;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      c.seed = seed;
      for (auto& l : c.links) l.loss = 0.001;
      bench::RunResult r;
      per_seed.push_back(goodput(c, &a, &r));
      for (const auto& d : r.directives) {
        ++checked;
        if (d.stalled) ++stalls;
        if (d.apply_at - d.window_end != 2 * lat) ++off;
      }
    }
    g.push_back(bench::median(per_seed));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < g.size(); ++i) monotone = monotone && g[i] <= 1.02 * g[i - 1];
  o.require(monotone, "goodput non-increasing within 2%");
  o.require(off == 0 && stalls == 0 && checked > 0, "apply_at offsets");
  o.detail << "goodput (Mbps) at edge RTT 0/2/10/50 ms:";
  for (double x : g) o.detail << ' ' << fmt(x / 1e6, 2);
  o.detail << "; " << checked << " directives, " << off << " off the configured latency";
  return o;
}

Outcome fairness() {
  Outcome o;
  o.require(bench::jfi(std::vector<double>{5, 5, 5}) == 1.0, "jfi equal");
  o.require(bench::jfi(std::vector<double>{9, 0, 0}) == 1.0 / 3.0, "jfi 1/n");
  o.require(bench::jfi(std::vector<double>{1, 3}) == 16.0 / 20.0, "jfi (1,3)");
  bool threw = false;
  try {
    bench::jfi(std::vector<double>{0, 0});
  } catch (const std::invalid_argument&) {
    threw = true;
  }
  o.require(threw, "all-zero rejected");
  ScenarioConfig c = desk("dtqn");
  c.workload.competitor_cc = "reno";
  RunOptions opt;
  opt.agent = &desk_agent();
  const auto r = bench::fairness(c, opt);
  const auto summary = bench::summary_json(c, r);
  const double j = summary.at("metrics").at("jfi").get<double>();
  o.require(j > 0.0 && j <= 1.0, "JFI in (0, 1]");
  o.detail << "agent vs Reno on the shared path: JFI " << fmt(j, 4) << " (agent " << fmt(r.metrics.goodput_bps / 1e6, 2)
           << " Mbps, Reno " << fmt(r.metrics.competitor_goodput_bps / 1e6, 2) << " Mbps)";
  return o;
}

Outcome determinism_conservation() {
  Outcome o;
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / ("mpcc_acceptance_" + std::to_string(::getpid()));
  int compared = 0, differing = 0;
  auto same_files = [&](const fs::path& a, const fs::path& b) {
    for (const auto& entry : fs::directory_iterator(a)) {
      ++compared;
      if (bench::read_file(entry.path().string()) != bench::read_file((b / entry.path().filename()).string())) {
        ++differing;
      }
    }
  };
  for (const char* cc : {"reno", "cubic", "lia", "dtqn"}) {
    ScenarioConfig c = desk(cc, 5.0);
    c.record_series = true;
    c.seed = 4242;
    for (auto& l : c.links) l.loss = 0.005;
    for (int k = 0; k < 2; ++k) {
      // A fresh agent is trained in each copy, so training is covered too.
      RunOptions opt;
      std::unique_ptr<agent::DqnAgent> ag;
      if (c.agent_controlled()) {
        ag = bench::make_agent(c);
        opt.agent = ag.get();
        opt.training = true;
      }
      bench::write_run_outputs((root / cc / std::to_string(k)).string(), c, bench::run_scenario(c, opt));
    }
    same_files(root / cc / "0", root / cc / "1");
  }
  for (int k = 0; k < 2; ++k) {
    const auto pts = bench::sweep(desk("cubic", 2.0), bench::SweepAxis::kLoss, {0.0, 0.01}, 2);
    bench::write_file((root / ("sweep" + std::to_string(k) + ".csv")).string(),
                      bench::to_csv(bench::sweep_table(bench::SweepAxis::kLoss, pts)));
  }
  ++compared;
  if (bench::read_file((root / "sweep0.csv").string()) != bench::read_file((root / "sweep1.csv").string())) ++differing;
  fs::remove_all(root);
  o.require(differing == 0, "byte-identical outputs");

  // Conservation fuzz: random paths, losses, buffers and traces.
  netsim::Rng rng(99);
  std::uint64_t events = 0, checks = 0;
  int runs = 0, violations = 0;
  const char* ccs[] = {"reno", "cubic", "lia"};
  while (events < 1'000'000) {
    ScenarioConfig c;
    c.seed = rng.next();
    c.cc = ccs[rng.below(3)];
    c.duration_s = 2.0;
    c.record_series = false;
    c.links.resize(1 + rng.below(3));
    for (auto& l : c.links) {
      l.rate_mbps = rng.uniform(1, 50);
      l.prop_delay_ms = rng.uniform(0.1, 30);
      l.loss = rng.bernoulli(0.5) ? rng.uniform(0, 0.05) : 0.0;
      l.buffer_pkts = 1 + static_cast<int>(rng.below(60));
      if (rng.bernoulli(0.3)) {
        l.alternate_rates_mbps = {l.rate_mbps, rng.uniform(1, 50)};
        l.alternate_period_ms = rng.uniform(50, 500);
      }
    }
    RunOptions opt;
    opt.check_conservation = true;
    const auto r = bench::run_scenario(c, opt);
    events += r.events;
    checks += r.conservation_checks;
    if (!r.conservation_ok) ++violations;
    ++runs;
  }
  o.require(violations == 0, "conservation");
  o.require(checks == events, "checked at every event");
  o.detail << compared << " output files compared, " << differing << " differ; " << events << " events in " << runs
           << " fuzz runs, " << violations << " conservation violations";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"scheduler oracle equivalence", scheduler_oracle},
      {"reward unit suite", reward_suite},
      {"gradient correctness", gradient_correctness},
      {"Bellman machinery", bellman},
      {"partial-observability ordering", partial_observability},
      {"loss robustness", loss_robustness},
      {"fluctuating-bandwidth responsiveness", fluctuating_bandwidth},
      {"buffer insensitivity", buffer_insensitivity},
      {"edge-latency sweep", edge_latency},
      {"fairness harness", fairness},
      {"determinism and conservation", determinism_conservation},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::stoi(argv[i]));
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome out;
    try {
      out = criteria[k].second();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << "exception: " << e.what();
    }
    if (!out.pass) ++failed;
    std::printf("criterion %2d %s  %s: %s [%.1f s]\n", id, out.pass ? "PASS" : "FAIL", criteria[k].first,
                out.detail.str().c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
