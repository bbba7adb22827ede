#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpcc/agent/cc_engine.hpp"
#include "mpcc/agent/dqn.hpp"
#include "mpcc/bench/config.hpp"
#include "mpcc/bench/metrics.hpp"
#include "mpcc/telemetry/engine.hpp"
#include "mpcc/telemetry/proxy.hpp"

namespace mpcc::bench {

struct RunOptions {
  // Agent shared across runs; when null and the scenario is agent
  // controlled, one is built from the config (and its checkpoint).
  agent::DqnAgent* agent = nullptr;
  bool training = false;
  // Replaces the transport named in the config.
  telemetry::EngineChannel* channel = nullptr;
  // Check packet conservation on every link after every event.
  bool check_conservation = false;
};

struct RunResult {
  RunMetrics metrics;
  std::vector<telemetry::DirectiveRecord> directives;
  agent::EpisodeStats episode;
  std::uint64_t events = 0;
  bool conservation_ok = true;
  std::uint64_t conservation_checks = 0;
};

// Input width and action count of the agent a scenario needs.
int agent_input_dim(const ScenarioConfig& cfg);
int agent_num_actions(const ScenarioConfig& cfg);
std::unique_ptr<agent::DqnAgent> make_agent(const ScenarioConfig& cfg);

// Per-subflow cwnd ceiling: cwnd_max_bdp x path BDP, never below twice the
// start-phase exit window.
int cwnd_max_for(const ScenarioConfig& cfg, int subflow);

RunResult run_scenario(const ScenarioConfig& cfg, const RunOptions& opt = {});

nlohmann::json summary_json(const ScenarioConfig& cfg, const RunResult& r);
// Writes series.csv and summary.json into `dir` (created if missing).
void write_run_outputs(const std::string& dir, const ScenarioConfig& cfg, const RunResult& r);

}  // namespace mpcc::bench
