#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mpcc/bench/config.hpp"
#include "mpcc/bench/csv.hpp"
#include "mpcc/bench/metrics.hpp"
#include "mpcc/bench/runner.hpp"

namespace mpcc::bench {

enum class SweepAxis { kLoss, kBuffer, kEdgeLatency };

SweepAxis parse_axis(const std::string& name);
const char* to_string(SweepAxis axis);

// loss: random loss on every link; buffer: buffer size as a BDP ratio on
// every link; edge_latency: one-way engine latency in microseconds.
ScenarioConfig apply_axis(const ScenarioConfig& cfg, SweepAxis axis, double value);

// Seed of sweep point i, repetition j.
std::uint64_t point_seed(std::uint64_t root, std::size_t i, std::size_t j);

struct SweepPoint {
  double value = 0.0;
  int rep = 0;
  std::uint64_t seed = 0;
  RunMetrics metrics;
};

std::vector<SweepPoint> sweep(const ScenarioConfig& cfg, SweepAxis axis, const std::vector<double>& values, int reps,
                              const RunOptions& opt = {});
// Long format: one row per (value, rep).
CsvTable sweep_table(SweepAxis axis, const std::vector<SweepPoint>& points);

// Every flow runs in a fresh scenario on otherwise idle links.
std::vector<FctStats> fct_experiment(const ScenarioConfig& cfg, const std::vector<std::int64_t>& sizes, int reps,
                                     const RunOptions& opt = {});
CsvTable fct_table(const std::vector<FctStats>& stats);

// The multipath connection shares `competitor_link` with one single-path flow.
RunResult fairness(const ScenarioConfig& cfg, const RunOptions& opt = {});

struct EpisodeSummary {
  int episode = 0;
  std::uint64_t seed = 0;
  double goodput_bps = 0.0;
  double reward_sum = 0.0;
  double epsilon = 0.0;
  double loss = 0.0;
  std::int64_t train_steps = 0;
};

// Runs `episodes` training episodes with per-episode derived seeds.
std::vector<EpisodeSummary> train(const ScenarioConfig& cfg, agent::DqnAgent& agent, int episodes,
                                  const std::function<void(const EpisodeSummary&)>& progress = {});
CsvTable training_table(const std::vector<EpisodeSummary>& rows);

struct ReplayReport {
  bool metrics_match = false;
  bool series_match = false;  // true when no series file was recorded
  std::string detail;
};

// Reruns the config echoed in `dir`/summary.json and compares the outputs
// with those stored in `dir`.
ReplayReport replay(const std::string& dir, const RunOptions& opt = {});

}  // namespace mpcc::bench
