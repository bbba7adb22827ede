#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpcc/agent/cc_engine.hpp"
#include "mpcc/agent/dqn.hpp"
#include "mpcc/datapath/connection.hpp"
#include "mpcc/netsim/link.hpp"
#include "mpcc/reward/reward.hpp"

namespace mpcc::bench {

struct LinkConfig {
  double rate_mbps = 10.0;
  double prop_delay_ms = 1.0;  // one way
  double loss = 0.0;
  int buffer_pkts = 100;
  double buffer_bdp = 0.0;  // > 0 overrides buffer_pkts
  // Explicit schedule, or a square wave over `alternate_rates_mbps`.
  std::vector<netsim::TracePoint> trace;
  std::vector<double> alternate_rates_mbps;
  double alternate_period_ms = 0.0;

  double max_rate_mbps() const;
  // Packets in flight at the maximum rate over the two-way propagation delay.
  double bdp_pkts() const;
  int effective_buffer_pkts() const;
  netsim::LinkSpec to_spec(double duration_s) const;
};

struct WorkloadConfig {
  std::string kind = "bulk";  // bulk | flows | competing | cbr
  std::vector<std::int64_t> flow_sizes_bytes;
  int repetitions = 1;
  std::string competitor_cc = "reno";
  int competitor_link = 0;
  double cbr_rate_mbps = 0.0;
};

struct TelemetryConfig {
  double window_ms = 10.0;
  int invoke_every = 0;  // 0: 1 for dtqn, 5 for ddqn
  int stall_windows = 10;
  std::vector<double> bw_ceiling_mbps;  // empty: each subflow's link peak
  std::vector<double> rtt_ceiling_ms;   // empty: 10x the path's two-way propagation
};

struct EngineConfig {
  std::string transport = "inproc";  // inproc | socket:ADDR
  std::string deployment = "local";  // local | edge
  std::int64_t edge_latency_us = 1000;  // one way, each direction
  std::int64_t compute_us = 0;
  std::int64_t uplink_us() const { return deployment == "edge" ? edge_latency_us : 0; }
  std::int64_t downlink_us() const { return deployment == "edge" ? edge_latency_us : 0; }
};

struct TrainingConfig {
  int episodes = 1;
  std::string checkpoint;  // load before the run when non-empty
  bool eval_only = false;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  double duration_s = 10.0;
  std::vector<LinkConfig> links{LinkConfig{}, LinkConfig{}};
  std::vector<int> paths;  // subflow i -> link index; empty: identity
  std::string cc = "reno";  // reno | cubic | lia | dtqn | ddqn
  double cwnd_max_bdp = 4.0;
  WorkloadConfig workload;
  TelemetryConfig telemetry;
  EngineConfig engine;
  agent::AgentConfig agent;
  agent::CcEngineConfig action;  // action space and reward parameters
  datapath::DatapathConfig datapath;
  TrainingConfig training;
  bool record_series = true;

  bool agent_controlled() const { return cc == "dtqn" || cc == "ddqn"; }
  int num_subflows() const;
  int link_of(int subflow) const;
  int invoke_every() const;
  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

ScenarioConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& c);
ScenarioConfig load_config(const std::string& path);

reward::RewardParams reward_from_json(const nlohmann::json& j);
nlohmann::json to_json(const reward::RewardParams& p);

// Hex SHA-1 over "blob <size>\0<bytes>", as git computes object ids.
std::string git_blob_sha1(const std::string& bytes);
// Content hash of the canonical JSON form of a config.
std::string config_hash(const ScenarioConfig& c);

}  // namespace mpcc::bench
