#include "mpcc/bench/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

#include "mpcc/agent/checkpoint.hpp"
#include "mpcc/baselines/cubic.hpp"
#include "mpcc/baselines/lia.hpp"
#include "mpcc/baselines/reno.hpp"
#include "mpcc/bench/csv.hpp"
#include "mpcc/datapath/connection.hpp"
#include "mpcc/netsim/link.hpp"
#include "mpcc/telemetry/socket_channel.hpp"

namespace mpcc::bench {

namespace {

using datapath::Connection;
using netsim::SimTime;

std::unique_ptr<datapath::CongestionController> make_controller(const std::string& name) {
  if (name == "reno") return std::make_unique<baselines::Reno>();
  if (name == "cubic") return std::make_unique<baselines::Cubic>();
  if (name == "lia") return std::make_unique<baselines::Lia>();
  throw std::invalid_argument("no classical controller named '" + name + "'");
}

// Per-window ACK accounting for the series output, independent of the proxy
// so every algorithm gets the same columns.
struct WindowCounter {
  std::int64_t bytes = 0;
  std::int64_t acks = 0;
  double rtt_sum = 0.0;
};

class SeriesSampler {
 public:
  SeriesSampler(netsim::Simulator& sim, std::int64_t window_us, std::vector<SeriesRow>* out)
      : sim_(sim), window_us_(window_us), out_(out) {}

  void watch(Connection& conn) {
    const std::size_t idx = conns_.size();
    conns_.push_back(&conn);
    counters_.emplace_back(static_cast<std::size_t>(conn.num_subflows()));
    last_rtt_.emplace_back(static_cast<std::size_t>(conn.num_subflows()), 0.0);
    conn.add_ack_listener([this, idx](const datapath::AckRecord& rec) {
      auto& c = counters_[idx][static_cast<std::size_t>(rec.subflow_id)];
      c.bytes += rec.delivered_bytes_delta;
      ++c.acks;
      c.rtt_sum += static_cast<double>(rec.rtt_us);
    });
  }

  void start() { sim_.schedule_in(window_us_, [this] { tick(); }); }

 private:
  void tick() {
    const SimTime now = sim_.now();
    for (std::size_t k = 0; k < conns_.size(); ++k) {
      Connection& conn = *conns_[k];
      for (int i = 0; i < conn.num_subflows(); ++i) {
        auto& c = counters_[k][static_cast<std::size_t>(i)];
        auto& last = last_rtt_[k][static_cast<std::size_t>(i)];
        if (c.acks > 0) last = c.rtt_sum / static_cast<double>(c.acks);
        SeriesRow row;
        row.t_us = now.us();
        row.conn = conn.conn_id();
        row.subflow = i;
        row.throughput_bps = static_cast<double>(c.bytes) * 8.0 / (static_cast<double>(window_us_) * 1e-6);
        row.mean_rtt_us = last;
        row.acks = c.acks;
        row.cwnd = conn.subflow(i).cwnd_pkts;
        row.inflight = conn.subflow(i).inflight_pkts;
        row.queue_pkts = conn.path(i).in_queue(now);
        out_->push_back(row);
        c = WindowCounter{};
      }
    }
    sim_.schedule_in(window_us_, [this] { tick(); });
  }

  netsim::Simulator& sim_;
  std::int64_t window_us_;
  std::vector<SeriesRow>* out_;
  std::vector<Connection*> conns_;
  std::vector<std::vector<WindowCounter>> counters_;
  std::vector<std::vector<double>> last_rtt_;
};

}  // namespace

int agent_input_dim(const ScenarioConfig& cfg) { return cfg.num_subflows() * telemetry::kNumFeatures; }

int agent_num_actions(const ScenarioConfig& cfg) {
  return agent::ActionSpace(cfg.num_subflows(), cfg.action.max_steps, cfg.action.unit_pkts).size();
}

std::unique_ptr<agent::DqnAgent> make_agent(const ScenarioConfig& cfg) {
  auto a = std::make_unique<agent::DqnAgent>(cfg.agent, agent_input_dim(cfg), agent_num_actions(cfg));
  if (!cfg.training.checkpoint.empty()) {
    a->set_online(agent::load_params_for(cfg.training.checkpoint, a->network()));
    a->sync_target();
  }
  return a;
}

int cwnd_max_for(const ScenarioConfig& cfg, int subflow) {
  const auto& link = cfg.links[static_cast<std::size_t>(cfg.link_of(subflow))];
  const int by_bdp = static_cast<int>(std::ceil(cfg.cwnd_max_bdp * link.bdp_pkts()));
  return std::max({by_bdp, 2 * cfg.datapath.start_exit_cwnd, cfg.datapath.cwnd_min + 1});
}

RunResult run_scenario(const ScenarioConfig& cfg, const RunOptions& opt) {
  cfg.validate();
  RunResult result;
  RunMetrics& m = result.metrics;
  const int n_sub = cfg.num_subflows();
  m.subflow_goodput_bps.assign(static_cast<std::size_t>(n_sub), 0.0);
  if (cfg.duration_s <= 0.0) return result;

  const SimTime end = SimTime::from_s(cfg.duration_s);
  netsim::Simulator sim;

  std::vector<std::unique_ptr<netsim::Link>> links;
  std::vector<std::map<int, Connection*>> routes(cfg.links.size());
  for (std::size_t l = 0; l < cfg.links.size(); ++l) {
    netsim::Rng rng(netsim::derive_seed(cfg.seed, {netsim::streams::kLink, l}));
    links.push_back(
        std::make_unique<netsim::Link>(sim, cfg.links[l].to_spec(cfg.duration_s), std::move(rng), static_cast<int>(l)));
    auto& table = routes[l];
    links[l]->set_data_sink([&table](const netsim::Packet& p) { table.at(p.conn_id)->on_data(p); });
    links[l]->set_ack_sink([&table](const netsim::Packet& p) { table.at(p.conn_id)->on_ack(p); });
  }

  // The multipath connection under test.
  std::vector<netsim::Link*> paths;
  std::vector<int> cwnd_max;
  std::set<int> used_links;
  for (int i = 0; i < n_sub; ++i) {
    const int l = cfg.link_of(i);
    paths.push_back(links[static_cast<std::size_t>(l)].get());
    cwnd_max.push_back(cwnd_max_for(cfg, i));
    used_links.insert(l);
  }
  const auto mode = cfg.agent_controlled() ? datapath::ControlMode::kAgent : datapath::ControlMode::kBaseline;
  Connection conn(sim, 0, paths, cwnd_max, cfg.datapath, mode);
  for (int l : used_links) routes[static_cast<std::size_t>(l)][0] = &conn;

  std::unique_ptr<datapath::CongestionController> controller;
  if (!cfg.agent_controlled()) {
    controller = make_controller(cfg.cc);
    conn.set_controller(controller.get());
  }

  // Optional single-path competitor sharing one of the links.
  std::unique_ptr<Connection> competitor;
  std::unique_ptr<datapath::CongestionController> competitor_cc;
  const auto& wl = cfg.workload;
  if (wl.kind == "competing") {
    const auto l = static_cast<std::size_t>(wl.competitor_link);
    const auto& lc = cfg.links[l];
    const int cmax = std::max(static_cast<int>(std::ceil(cfg.cwnd_max_bdp * lc.bdp_pkts())),
                              2 * cfg.datapath.start_exit_cwnd);
    competitor = std::make_unique<Connection>(sim, 1, std::vector<netsim::Link*>{links[l].get()}, std::vector<int>{cmax},
                                              cfg.datapath, datapath::ControlMode::kBaseline);
    competitor_cc = make_controller(wl.competitor_cc);
    competitor->set_controller(competitor_cc.get());
    competitor->set_unbounded_backlog();
    routes[l][1] = competitor.get();
  }

  // RTT statistics over every acknowledged packet of the connection under test.
  RunningStats rtt;
  conn.add_ack_listener([&rtt](const datapath::AckRecord& rec) {
    if (rec.rtt_us > 0) rtt.add(static_cast<double>(rec.rtt_us));
  });

  const auto window_us = static_cast<std::int64_t>(std::llround(cfg.telemetry.window_ms * 1000.0));
  SeriesSampler sampler(sim, window_us, &m.series);
  if (cfg.record_series) {
    sampler.watch(conn);
    if (competitor) sampler.watch(*competitor);
  }

  // Agent control loop.
  std::unique_ptr<agent::DqnAgent> own_agent;
  std::unique_ptr<agent::CcEngine> engine;
  std::unique_ptr<telemetry::EngineChannel> own_channel;
  std::unique_ptr<telemetry::Proxy> proxy;
  if (cfg.agent_controlled()) {
    telemetry::EngineChannel* channel = opt.channel;
    if (!channel && cfg.engine.transport.rfind("socket:", 0) == 0) {
      own_channel = std::make_unique<telemetry::SocketChannel>(
          telemetry::SocketChannel::connect_to(cfg.engine.transport.substr(7)));
      channel = own_channel.get();
    }
    if (!channel) {
      agent::DqnAgent* ag = opt.agent;
      if (!ag) {
        own_agent = make_agent(cfg);
        ag = own_agent.get();
      }
      ag->set_training(opt.training && !cfg.training.eval_only);
      engine = std::make_unique<agent::CcEngine>(*ag, cfg.action);
      own_channel = std::make_unique<telemetry::InprocChannel>(*engine);
      channel = own_channel.get();
    }
    telemetry::ProxyConfig pc;
    pc.window_us = window_us;
    pc.invoke_every = cfg.invoke_every();
    pc.uplink_us = cfg.engine.uplink_us();
    pc.downlink_us = cfg.engine.downlink_us();
    pc.compute_us = cfg.engine.compute_us;
    pc.stall_windows = cfg.telemetry.stall_windows;
    pc.expflag_period = cfg.action.reward.expflag_period;
    for (int i = 0; i < n_sub; ++i) {
      const auto& lc = cfg.links[static_cast<std::size_t>(cfg.link_of(i))];
      const auto si = static_cast<std::size_t>(i);
      pc.bw_ceiling_bps.push_back(cfg.telemetry.bw_ceiling_mbps.empty() ? lc.max_rate_mbps() * 1e6
                                                                        : cfg.telemetry.bw_ceiling_mbps[si] * 1e6);
      const double two_way_us = std::max(1000.0, 2.0 * lc.prop_delay_ms * 1000.0);
      pc.rtt_ceiling_us.push_back(cfg.telemetry.rtt_ceiling_ms.empty() ? 10.0 * two_way_us
                                                                       : cfg.telemetry.rtt_ceiling_ms[si] * 1000.0);
    }
    pc.engine_config = {{"cc", cfg.cc}, {"agent", agent::to_json(cfg.agent)}};
    proxy = std::make_unique<telemetry::Proxy>(sim, conn, *channel, std::move(pc));
    proxy->set_end_time(end);
  }

  // Workload.
  bool stop = false;
  SimTime finished_at = end;
  std::vector<std::int64_t> flow_sizes;
  std::size_t next_flow = 0;
  std::int64_t flow_total = 0;
  SimTime flow_start;
  std::function<void()> start_next_flow;
  std::int64_t cbr_interval_us = 1000;
  double cbr_carry = 0.0;
  std::function<void()> cbr_tick;

  if (wl.kind == "bulk" || wl.kind == "competing") {
    conn.set_unbounded_backlog();
  } else if (wl.kind == "flows") {
    for (int r = 0; r < wl.repetitions; ++r) {
      for (auto s : wl.flow_sizes_bytes) flow_sizes.push_back(s);
    }
    // Flows run back to back on the same connection; each starts when the
    // previous one is fully acknowledged.
    start_next_flow = [&] {
      if (next_flow >= flow_sizes.size()) {
        stop = true;
        finished_at = sim.now();
        return;
      }
      const std::int64_t size = flow_sizes[next_flow++];
      flow_total += size;
      flow_start = sim.now();
      conn.track_completion(flow_total, [&](SimTime at) {
        m.fct_us.push_back(static_cast<double>(at - flow_start));
        start_next_flow();
      });
      conn.add_app_data(size);
    };
  } else if (wl.kind == "cbr") {
    const double bytes_per_tick = wl.cbr_rate_mbps * 1e6 / 8.0 * static_cast<double>(cbr_interval_us) * 1e-6;
    conn.set_offered_load_bps(wl.cbr_rate_mbps * 1e6);
    cbr_tick = [&, bytes_per_tick] {
      cbr_carry += bytes_per_tick;
      const auto whole = static_cast<std::int64_t>(cbr_carry);
      cbr_carry -= static_cast<double>(whole);
      conn.add_app_data(whole);
      sim.schedule_in(cbr_interval_us, cbr_tick);
    };
  }

  if (opt.check_conservation) {
    sim.set_post_event_hook([&] {
      ++result.conservation_checks;
      for (auto& l : links) {
        if (!l->conservation_holds(sim.now())) result.conservation_ok = false;
      }
    });
  }

  if (proxy) proxy->start();
  if (cfg.record_series) sampler.start();
  if (wl.kind == "flows") {
    if (flow_sizes.empty()) {
      stop = true;
      finished_at = SimTime::zero();
    } else {
      start_next_flow();
    }
  } else if (wl.kind == "cbr") {
    cbr_tick();
  }
  conn.start();
  if (competitor) competitor->start();

  while (!stop && !sim.empty() && sim.next_time() <= end) sim.step();
  result.events = sim.events_processed();
  if (proxy) proxy->finish();

  // Metrics.
  m.duration_s = std::max(0.0, finished_at.seconds());
  const double dur = m.duration_s;
  if (dur > 0.0) {
    m.goodput_bps = static_cast<double>(conn.goodput_bytes()) * 8.0 / dur;
    for (int i = 0; i < n_sub; ++i) {
      m.subflow_goodput_bps[static_cast<std::size_t>(i)] = static_cast<double>(conn.subflow(i).delivered_bytes) * 8.0 / dur;
    }
  }
  double capacity_bits = 0.0;
  for (int l : used_links) {
    capacity_bits += links[static_cast<std::size_t>(l)]->spec().max_rate_bps() * dur + 8.0 * netsim::kMtuBytes;
  }
  if (static_cast<double>(conn.goodput_bytes()) * 8.0 > capacity_bits * (1.0 + 1e-9)) {
    throw std::logic_error("goodput exceeds the configured capacity of the connection's links");
  }

  m.rtt_mean_us = rtt.mean();
  m.rtt_std_us = rtt.stddev();
  m.rtt_cv = rtt.cv();
  m.rtt_samples = rtt.count();
  for (int i = 0; i < n_sub; ++i) {
    m.retransmissions += conn.counters(i).retransmissions;
    m.timeouts += conn.counters(i).timeouts;
  }
  for (auto& l : links) {
    m.drops_buffer += l->counters().dropped_buffer;
    m.drops_loss += l->counters().dropped_loss;
  }

  if (competitor) {
    m.has_competitor = true;
    m.competitor_goodput_bps = dur > 0.0 ? static_cast<double>(competitor->goodput_bytes()) * 8.0 / dur : 0.0;
    double shared = 0.0;
    for (int i = 0; i < n_sub; ++i) {
      if (cfg.link_of(i) == wl.competitor_link) shared += m.subflow_goodput_bps[static_cast<std::size_t>(i)];
    }
    const std::vector<double> shares{shared, m.competitor_goodput_bps};
    if (shared > 0.0 || m.competitor_goodput_bps > 0.0) m.jfi = jfi(shares);
  }

  if (proxy) {
    m.decisions = proxy->dispatched();
    m.stalls = proxy->stalls();
    result.directives = proxy->directives();
  }
  if (engine) {
    result.episode = engine->stats();
    m.reward_sum = result.episode.reward_sum;
  }
  return result;
}

nlohmann::json summary_json(const ScenarioConfig& cfg, const RunResult& r) {
  nlohmann::json j;
  j["config"] = to_json(cfg);
  j["config_hash"] = config_hash(cfg);
  j["metrics"] = to_json(r.metrics);
  j["events"] = r.events;
  j["directives"] = r.directives.size();
  j["episode"] = {{"steps", r.episode.steps},
                  {"reward_sum", r.episode.reward_sum},
                  {"boundary_penalties", r.episode.boundary_penalties},
                  {"expflag_rewards", r.episode.expflag_rewards},
                  {"expflag_penalties", r.episode.expflag_penalties}};
  return j;
}

void write_run_outputs(const std::string& dir, const ScenarioConfig& cfg, const RunResult& r) {
  std::filesystem::create_directories(dir);
  write_file(dir + "/series.csv", to_csv(series_table(r.metrics.series)));
  write_file(dir + "/summary.json", summary_json(cfg, r).dump(2) + "\n");
}

}  // namespace mpcc::bench
