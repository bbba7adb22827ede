#include "mpcc/bench/config.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mpcc::bench {

using nlohmann::json;

namespace {

// Reads known keys from a JSON object and rejects everything else.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw std::invalid_argument(path_ + ": expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    used_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw std::invalid_argument(where(key) + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) throw std::invalid_argument(where(key) + ": unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& field, const std::string& why) {
  if (!ok) throw std::invalid_argument(field + ": " + why);
}

LinkConfig link_from_json(const json& j, const std::string& path) {
  LinkConfig l;
  Fields f(j, path);
  f.get("rate_mbps", l.rate_mbps);
  f.get("prop_delay_ms", l.prop_delay_ms);
  f.get("loss", l.loss);
  f.get("buffer_pkts", l.buffer_pkts);
  f.get("buffer_bdp", l.buffer_bdp);
  f.get("alternate_rates_mbps", l.alternate_rates_mbps);
  f.get("alternate_period_ms", l.alternate_period_ms);
  if (const json* t = f.child("trace")) {
    if (!t->is_array()) throw std::invalid_argument(f.where("trace") + ": expected an array");
    for (std::size_t i = 0; i < t->size(); ++i) {
      Fields p((*t)[i], f.where("trace[" + std::to_string(i) + "]"));
      double at_ms = 0.0;
      double rate = l.rate_mbps;
      double delay = l.prop_delay_ms;
      p.get("at_ms", at_ms);
      p.get("rate_mbps", rate);
      p.get("prop_delay_ms", delay);
      p.finish();
      l.trace.push_back(netsim::TracePoint{netsim::SimTime(std::llround(at_ms * 1000.0)), rate * 1e6,
                                           std::llround(delay * 1000.0)});
    }
  }
  f.finish();
  return l;
}

json link_to_json(const LinkConfig& l) {
  json j{{"rate_mbps", l.rate_mbps},
         {"prop_delay_ms", l.prop_delay_ms},
         {"loss", l.loss},
         {"buffer_pkts", l.buffer_pkts},
         {"buffer_bdp", l.buffer_bdp}};
  if (!l.alternate_rates_mbps.empty()) {
    j["alternate_rates_mbps"] = l.alternate_rates_mbps;
    j["alternate_period_ms"] = l.alternate_period_ms;
  }
  if (!l.trace.empty()) {
    json t = json::array();
    for (const auto& p : l.trace) {
      t.push_back({{"at_ms", static_cast<double>(p.at.us()) / 1000.0},
                   {"rate_mbps", p.rate_bps / 1e6},
                   {"prop_delay_ms", static_cast<double>(p.prop_delay_us) / 1000.0}});
    }
    j["trace"] = t;
  }
  return j;
}

datapath::DatapathConfig datapath_from_json(const json& j) {
  datapath::DatapathConfig d;
  Fields f(j, "datapath");
  f.get("cwnd_min", d.cwnd_min);
  f.get("initial_cwnd", d.initial_cwnd);
  f.get("start_exit_cwnd", d.start_exit_cwnd);
  f.get("start_stable_acks", d.start_stable_acks);
  f.get("probe_interval_us", d.probe_interval_us);
  f.get("probe_cwnd", d.probe_cwnd);
  f.get("min_rtt_lifetime_us", d.min_rtt_lifetime_us);
  f.get("max_rate_window_us", d.max_rate_window_us);
  f.get("dupack_threshold", d.dupack_threshold);
  f.get("rto_min_us", d.rto_min_us);
  f.get("initial_rto_us", d.initial_rto_us);
  f.get("enable_probe", d.enable_probe);
  f.finish();
  return d;
}

json datapath_to_json(const datapath::DatapathConfig& d) {
  return {{"cwnd_min", d.cwnd_min},
          {"initial_cwnd", d.initial_cwnd},
          {"start_exit_cwnd", d.start_exit_cwnd},
          {"start_stable_acks", d.start_stable_acks},
          {"probe_interval_us", d.probe_interval_us},
          {"probe_cwnd", d.probe_cwnd},
          {"min_rtt_lifetime_us", d.min_rtt_lifetime_us},
          {"max_rate_window_us", d.max_rate_window_us},
          {"dupack_threshold", d.dupack_threshold},
          {"rto_min_us", d.rto_min_us},
          {"initial_rto_us", d.initial_rto_us},
          {"enable_probe", d.enable_probe}};
}

}  // namespace

double LinkConfig::max_rate_mbps() const {
  double m = rate_mbps;
  for (double r : alternate_rates_mbps) m = std::max(m, r);
  for (const auto& p : trace) m = std::max(m, p.rate_bps / 1e6);
  return m;
}

double LinkConfig::bdp_pkts() const {
  return max_rate_mbps() * 1e6 * (2.0 * prop_delay_ms * 1e-3) / (netsim::kMtuBytes * 8.0);
}

int LinkConfig::effective_buffer_pkts() const {
  if (buffer_bdp > 0.0) return std::max(1, static_cast<int>(std::lround(buffer_bdp * bdp_pkts())));
  return buffer_pkts;
}

netsim::LinkSpec LinkConfig::to_spec(double duration_s) const {
  netsim::LinkSpec s;
  s.rate_bps = rate_mbps * 1e6;
  s.prop_delay_us = std::llround(prop_delay_ms * 1000.0);
  s.loss_prob = loss;
  s.buffer_pkts = effective_buffer_pkts();
  s.trace = trace;
  if (!alternate_rates_mbps.empty()) {
    const auto period = std::llround(alternate_period_ms * 1000.0);
    const auto end = std::llround(duration_s * 1e6);
    std::size_t k = 0;
    for (std::int64_t t = 0; t <= end; t += period, ++k) {
      s.trace.push_back(netsim::TracePoint{netsim::SimTime(t), alternate_rates_mbps[k % alternate_rates_mbps.size()] * 1e6,
                                           s.prop_delay_us});
    }
    s.rate_bps = alternate_rates_mbps.front() * 1e6;
  }
  return s;
}

int ScenarioConfig::num_subflows() const { return paths.empty() ? static_cast<int>(links.size()) : static_cast<int>(paths.size()); }

int ScenarioConfig::link_of(int subflow) const { return paths.empty() ? subflow : paths[static_cast<std::size_t>(subflow)]; }

int ScenarioConfig::invoke_every() const {
  if (telemetry.invoke_every > 0) return telemetry.invoke_every;
  return cc == "ddqn" ? 5 : 1;
}

void ScenarioConfig::validate() const {
  require(std::isfinite(duration_s) && duration_s >= 0.0, "duration_s", "must be >= 0");
  require(!links.empty(), "links", "at least one link is required");
  for (std::size_t i = 0; i < links.size(); ++i) {
    const auto& l = links[i];
    const std::string p = "links[" + std::to_string(i) + "]";
    require(l.rate_mbps > 0.0, p + ".rate_mbps", "must be > 0");
    require(l.prop_delay_ms >= 0.0, p + ".prop_delay_ms", "must be >= 0");
    require(l.loss >= 0.0 && l.loss < 1.0, p + ".loss", "must be in [0, 1)");
    require(l.buffer_pkts >= 1, p + ".buffer_pkts", "must be >= 1");
    require(l.buffer_bdp >= 0.0, p + ".buffer_bdp", "must be >= 0");
    for (double r : l.alternate_rates_mbps) require(r > 0.0, p + ".alternate_rates_mbps", "rates must be > 0");
    require(l.alternate_rates_mbps.empty() || l.alternate_period_ms > 0.0, p + ".alternate_period_ms",
            "must be > 0 when alternating");
    l.to_spec(std::min(duration_s, 1.0)).validate();
  }
  for (std::size_t i = 0; i < paths.size(); ++i) {
    require(paths[i] >= 0 && paths[i] < static_cast<int>(links.size()), "paths[" + std::to_string(i) + "]",
            "no such link");
  }
  require(cc == "reno" || cc == "cubic" || cc == "lia" || cc == "dtqn" || cc == "ddqn", "cc",
          "must be one of reno, cubic, lia, dtqn, ddqn");
  require(cwnd_max_bdp > 0.0, "cwnd_max_bdp", "must be > 0");
  const auto& w = workload;
  require(w.kind == "bulk" || w.kind == "flows" || w.kind == "competing" || w.kind == "cbr", "workload.kind",
          "must be one of bulk, flows, competing, cbr");
  for (auto s : w.flow_sizes_bytes) require(s > 0, "workload.flow_sizes_bytes", "sizes must be > 0");
  require(w.kind != "flows" || !w.flow_sizes_bytes.empty(), "workload.flow_sizes_bytes", "flows needs at least one size");
  require(w.repetitions >= 0, "workload.repetitions", "must be >= 0");
  require(w.competitor_cc == "reno" || w.competitor_cc == "cubic", "workload.competitor_cc", "must be reno or cubic");
  require(w.competitor_link >= 0 && w.competitor_link < static_cast<int>(links.size()), "workload.competitor_link",
          "no such link");
  require(w.kind != "cbr" || w.cbr_rate_mbps > 0.0, "workload.cbr_rate_mbps", "must be > 0");
  require(telemetry.window_ms > 0.0, "telemetry.window_ms", "must be > 0");
  require(telemetry.invoke_every >= 0, "telemetry.invoke_every", "must be >= 0");
  require(telemetry.stall_windows >= 1, "telemetry.stall_windows", "must be >= 1");
  const auto m = static_cast<std::size_t>(num_subflows());
  require(telemetry.bw_ceiling_mbps.empty() || telemetry.bw_ceiling_mbps.size() == m, "telemetry.bw_ceiling_mbps",
          "needs one entry per subflow");
  require(telemetry.rtt_ceiling_ms.empty() || telemetry.rtt_ceiling_ms.size() == m, "telemetry.rtt_ceiling_ms",
          "needs one entry per subflow");
  for (double v : telemetry.bw_ceiling_mbps) require(v > 0.0, "telemetry.bw_ceiling_mbps", "must be > 0");
  for (double v : telemetry.rtt_ceiling_ms) require(v > 0.0, "telemetry.rtt_ceiling_ms", "must be > 0");
  require(engine.transport == "inproc" || engine.transport.rfind("socket:", 0) == 0, "engine.transport",
          "must be inproc or socket:ADDR");
  require(engine.deployment == "local" || engine.deployment == "edge", "engine.deployment", "must be local or edge");
  require(engine.edge_latency_us >= 0, "engine.edge_latency_us", "must be >= 0");
  require(engine.compute_us >= 0, "engine.compute_us", "must be >= 0");
  agent.validate();
  require(action.max_steps >= 0, "action.max_steps", "must be >= 0");
  require(action.unit_pkts >= 1, "action.unit_pkts", "must be >= 1");
  action.reward.validate();
  require(datapath.cwnd_min >= 1, "datapath.cwnd_min", "must be >= 1");
  require(datapath.dupack_threshold >= 1, "datapath.dupack_threshold", "must be >= 1");
  require(training.episodes >= 1, "training.episodes", "must be >= 1");
}

reward::RewardParams reward_from_json(const json& j) {
  reward::RewardParams p;
  Fields f(j, "reward");
  f.get("beta", p.beta);
  f.get("beta_scale", p.beta_scale);
  f.get("g", p.g);
  f.get("d_floor_us", p.d_floor_us);
  f.get("sigma_us", p.sigma_us);
  f.get("kappa", p.kappa);
  f.get("w_d", p.w_d);
  f.get("w_rho", p.w_rho);
  f.get("expflag_period", p.expflag_period);
  f.get("quantize", p.quantize);
  f.get("clamp_penalty", p.clamp_penalty);
  f.finish();
  return p;
}

json to_json(const reward::RewardParams& p) {
  return {{"beta", p.beta},           {"beta_scale", p.beta_scale}, {"g", p.g},         {"d_floor_us", p.d_floor_us},
          {"sigma_us", p.sigma_us},   {"kappa", p.kappa},           {"w_d", p.w_d},     {"w_rho", p.w_rho},
          {"expflag_period", p.expflag_period}, {"quantize", p.quantize}, {"clamp_penalty", p.clamp_penalty}};
}

ScenarioConfig config_from_json(const json& j) {
  ScenarioConfig c;
  Fields f(j, "");
  f.get("seed", c.seed);
  f.get("duration_s", c.duration_s);
  if (const json* links = f.child("links")) {
    if (!links->is_array()) throw std::invalid_argument("links: expected an array");
    c.links.clear();
    for (std::size_t i = 0; i < links->size(); ++i) {
      c.links.push_back(link_from_json((*links)[i], "links[" + std::to_string(i) + "]"));
    }
  }
  f.get("paths", c.paths);
  f.get("cc", c.cc);
  f.get("cwnd_max_bdp", c.cwnd_max_bdp);
  f.get("record_series", c.record_series);
  if (const json* w = f.child("workload")) {
    Fields g(*w, "workload");
    g.get("kind", c.workload.kind);
    g.get("flow_sizes_bytes", c.workload.flow_sizes_bytes);
    g.get("repetitions", c.workload.repetitions);
    g.get("competitor_cc", c.workload.competitor_cc);
    g.get("competitor_link", c.workload.competitor_link);
    g.get("cbr_rate_mbps", c.workload.cbr_rate_mbps);
    g.finish();
  }
  if (const json* t = f.child("telemetry")) {
    Fields g(*t, "telemetry");
    g.get("window_ms", c.telemetry.window_ms);
    g.get("invoke_every", c.telemetry.invoke_every);
    g.get("stall_windows", c.telemetry.stall_windows);
    g.get("bw_ceiling_mbps", c.telemetry.bw_ceiling_mbps);
    g.get("rtt_ceiling_ms", c.telemetry.rtt_ceiling_ms);
    g.finish();
  }
  if (const json* e = f.child("engine")) {
    Fields g(*e, "engine");
    g.get("transport", c.engine.transport);
    g.get("deployment", c.engine.deployment);
    g.get("edge_latency_us", c.engine.edge_latency_us);
    g.get("compute_us", c.engine.compute_us);
    g.finish();
  }
  if (const json* a = f.child("agent")) {
    try {
      c.agent = agent::agent_config_from_json(*a);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(e.what()));
    } catch (const json::exception& e) {
      throw std::invalid_argument(std::string("agent: ") + e.what());
    }
  }
  if (const json* a = f.child("action")) {
    Fields g(*a, "action");
    g.get("max_steps", c.action.max_steps);
    g.get("unit_pkts", c.action.unit_pkts);
    g.get("bind_floor_to_base_rtt", c.action.bind_floor_to_base_rtt);
    g.finish();
  }
  if (const json* r = f.child("reward")) c.action.reward = reward_from_json(*r);
  if (const json* d = f.child("datapath")) c.datapath = datapath_from_json(*d);
  if (const json* t = f.child("training")) {
    Fields g(*t, "training");
    g.get("episodes", c.training.episodes);
    g.get("checkpoint", c.training.checkpoint);
    g.get("eval_only", c.training.eval_only);
    g.finish();
  }
  f.finish();
  c.validate();
  return c;
}

json to_json(const ScenarioConfig& c) {
  json links = json::array();
  for (const auto& l : c.links) links.push_back(link_to_json(l));
  json j{{"seed", c.seed},
         {"duration_s", c.duration_s},
         {"links", links},
         {"paths", c.paths},
         {"cc", c.cc},
         {"cwnd_max_bdp", c.cwnd_max_bdp},
         {"record_series", c.record_series},
         {"workload",
          {{"kind", c.workload.kind},
           {"flow_sizes_bytes", c.workload.flow_sizes_bytes},
           {"repetitions", c.workload.repetitions},
           {"competitor_cc", c.workload.competitor_cc},
           {"competitor_link", c.workload.competitor_link},
           {"cbr_rate_mbps", c.workload.cbr_rate_mbps}}},
         {"telemetry",
          {{"window_ms", c.telemetry.window_ms},
           {"invoke_every", c.telemetry.invoke_every},
           {"stall_windows", c.telemetry.stall_windows},
           {"bw_ceiling_mbps", c.telemetry.bw_ceiling_mbps},
           {"rtt_ceiling_ms", c.telemetry.rtt_ceiling_ms}}},
         {"engine",
          {{"transport", c.engine.transport},
           {"deployment", c.engine.deployment},
           {"edge_latency_us", c.engine.edge_latency_us},
           {"compute_us", c.engine.compute_us}}},
         {"agent", agent::to_json(c.agent)},
         {"action",
          {{"max_steps", c.action.max_steps},
           {"unit_pkts", c.action.unit_pkts},
           {"bind_floor_to_base_rtt", c.action.bind_floor_to_base_rtt}}},
         {"reward", to_json(c.action.reward)},
         {"datapath", datapath_to_json(c.datapath)},
         {"training",
          {{"episodes", c.training.episodes},
           {"checkpoint", c.training.checkpoint},
           {"eval_only", c.training.eval_only}}}};
  return j;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return config_from_json(j);
}

std::string git_blob_sha1(const std::string& bytes) {
  const std::string header = "blob " + std::to_string(bytes.size()) + std::string(1, '\0');
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, header.data(), header.size()) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-1 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    const unsigned char b = digest[i];
    out.push_back(hex[b >> 4]);
    out.push_back(hex[b & 15]);
  }
  return out;
}

std::string config_hash(const ScenarioConfig& c) { return git_blob_sha1(to_json(c).dump()); }

}  // namespace mpcc::bench
