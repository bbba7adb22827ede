#include "mpcc/bench/experiments.hpp"

#include <filesystem>
#include <stdexcept>

#include "mpcc/netsim/rng.hpp"

namespace mpcc::bench {

SweepAxis parse_axis(const std::string& name) {
  if (name == "loss") return SweepAxis::kLoss;
  if (name == "buffer") return SweepAxis::kBuffer;
  if (name == "edge_latency") return SweepAxis::kEdgeLatency;
  throw std::invalid_argument("unknown sweep axis '" + name + "' (loss | buffer | edge_latency)");
}

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kLoss: return "loss";
    case SweepAxis::kBuffer: return "buffer";
    case SweepAxis::kEdgeLatency: return "edge_latency";
  }
  return "?";
}

ScenarioConfig apply_axis(const ScenarioConfig& cfg, SweepAxis axis, double value) {
  ScenarioConfig out = cfg;
  switch (axis) {
    case SweepAxis::kLoss:
      for (auto& l : out.links) l.loss = value;
      break;
    case SweepAxis::kBuffer:
      for (auto& l : out.links) l.buffer_bdp = value;
      break;
    case SweepAxis::kEdgeLatency:
      out.engine.deployment = "edge";
      out.engine.edge_latency_us = static_cast<std::int64_t>(value);
      break;
  }
  return out;
}

std::uint64_t point_seed(std::uint64_t root, std::size_t i, std::size_t j) {
  return netsim::derive_seed(root, {netsim::streams::kSweep, i, j});
}

std::vector<SweepPoint> sweep(const ScenarioConfig& cfg, SweepAxis axis, const std::vector<double>& values, int reps,
                              const RunOptions& opt) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  std::vector<SweepPoint> points;
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (int j = 0; j < reps; ++j) {
      ScenarioConfig c = apply_axis(cfg, axis, values[i]);
      c.seed = point_seed(cfg.seed, i, static_cast<std::size_t>(j));
      c.record_series = false;
      SweepPoint p;
      p.value = values[i];
      p.rep = j;
      p.seed = c.seed;
      p.metrics = run_scenario(c, opt).metrics;
      points.push_back(std::move(p));
    }
  }
  return points;
}

CsvTable sweep_table(SweepAxis axis, const std::vector<SweepPoint>& points) {
  CsvTable t;
  t.header = {"axis",    "value",     "rep",           "seed",    "goodput_bps", "rtt_mean_us",
              "rtt_cv",  "retransmissions", "timeouts", "drops_buffer", "drops_loss",  "decisions",
              "stalls"};
  for (const auto& p : points) {
    const auto& m = p.metrics;
    t.rows.push_back({to_string(axis), format_number(p.value), std::to_string(p.rep), std::to_string(p.seed),
                      format_number(m.goodput_bps), format_number(m.rtt_mean_us), format_number(m.rtt_cv),
                      std::to_string(m.retransmissions), std::to_string(m.timeouts), std::to_string(m.drops_buffer),
                      std::to_string(m.drops_loss), std::to_string(m.decisions), std::to_string(m.stalls)});
  }
  return t;
}

std::vector<FctStats> fct_experiment(const ScenarioConfig& cfg, const std::vector<std::int64_t>& sizes, int reps,
                                     const RunOptions& opt) {
  std::vector<FctStats> out;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] <= 0) throw std::invalid_argument("flow sizes must be > 0");
    std::vector<double> samples;
    for (int j = 0; j < reps; ++j) {
      ScenarioConfig c = cfg;
      c.seed = netsim::derive_seed(cfg.seed, {netsim::streams::kWorkload, i, static_cast<std::uint64_t>(j)});
      c.workload.kind = "flows";
      c.workload.flow_sizes_bytes = {sizes[i]};
      c.workload.repetitions = 1;
      c.record_series = false;
      const auto r = run_scenario(c, opt);
      samples.insert(samples.end(), r.metrics.fct_us.begin(), r.metrics.fct_us.end());
    }
    out.push_back(fct_stats(sizes[i], std::move(samples)));
  }
  return out;
}

CsvTable fct_table(const std::vector<FctStats>& stats) {
  CsvTable t;
  t.header = {"size_bytes", "count", "mean_us", "median_us", "p95_us", "min_us", "max_us"};
  for (const auto& s : stats) {
    t.rows.push_back({std::to_string(s.size_bytes), std::to_string(s.count), format_number(s.mean_us),
                      format_number(s.median_us), format_number(s.p95_us), format_number(s.min_us),
                      format_number(s.max_us)});
  }
  return t;
}

RunResult fairness(const ScenarioConfig& cfg, const RunOptions& opt) {
  ScenarioConfig c = cfg;
  c.workload.kind = "competing";
  return run_scenario(c, opt);
}

std::vector<EpisodeSummary> train(const ScenarioConfig& cfg, agent::DqnAgent& agent, int episodes,
                                  const std::function<void(const EpisodeSummary&)>& progress) {
  std::vector<EpisodeSummary> out;
  RunOptions opt;
  opt.agent = &agent;
  opt.training = true;
  for (int e = 0; e < episodes; ++e) {
    ScenarioConfig c = cfg;
    c.seed = netsim::derive_seed(cfg.seed, {netsim::streams::kAgent, 100, static_cast<std::uint64_t>(e)});
    c.record_series = false;
    const auto r = run_scenario(c, opt);
    EpisodeSummary s;
    s.episode = e;
    s.seed = c.seed;
    s.goodput_bps = r.metrics.goodput_bps;
    s.reward_sum = r.episode.reward_sum;
    s.epsilon = agent.epsilon();
    s.loss = agent.last_loss();
    s.train_steps = agent.train_steps();
    out.push_back(s);
    if (progress) progress(s);
  }
  return out;
}

CsvTable training_table(const std::vector<EpisodeSummary>& rows) {
  CsvTable t;
  t.header = {"episode", "seed", "goodput_bps", "reward_sum", "epsilon", "loss", "train_steps"};
  for (const auto& s : rows) {
    t.rows.push_back({std::to_string(s.episode), std::to_string(s.seed), format_number(s.goodput_bps),
                      format_number(s.reward_sum), format_number(s.epsilon), format_number(s.loss),
                      std::to_string(s.train_steps)});
  }
  return t;
}

ReplayReport replay(const std::string& dir, const RunOptions& opt) {
  const auto summary = nlohmann::json::parse(read_file(dir + "/summary.json"));
  const ScenarioConfig cfg = config_from_json(summary.at("config"));
  ReplayReport rep;
  if (summary.at("config_hash").get<std::string>() != config_hash(cfg)) {
    rep.detail = "config hash does not match the echoed config";
    return rep;
  }
  const auto r = run_scenario(cfg, opt);
  rep.metrics_match = to_json(r.metrics) == summary.at("metrics");
  const std::string series_path = dir + "/series.csv";
  if (std::filesystem::exists(series_path)) {
    rep.series_match = to_csv(series_table(r.metrics.series)) == read_file(series_path);
  } else {
    rep.series_match = true;
  }
  if (!rep.metrics_match) rep.detail += "metrics differ; ";
  if (!rep.series_match) rep.detail += "series.csv differs; ";
  if (rep.detail.empty()) rep.detail = "identical";
  return rep;
}

}  // namespace mpcc::bench
