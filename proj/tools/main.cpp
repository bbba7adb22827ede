// Command-line front end for scenario runs and experiment drivers.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mpcc/agent/checkpoint.hpp"
#include "mpcc/agent/cc_engine.hpp"
#include "mpcc/bench/experiments.hpp"
#include "mpcc/bench/runner.hpp"
#include "mpcc/telemetry/socket_channel.hpp"

using namespace mpcc;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::string engine;
  std::optional<std::int64_t> edge_latency_us;
  std::string checkpoint;
  bool eval_only = false;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Scenario config (JSON)");
  app->add_option("--seed", c.seed, "Root seed, overrides the config");
  app->add_option("--out", c.out, "Output directory");
  app->add_option("--engine", c.engine, "inproc | socket:unix:PATH | socket:HOST:PORT");
  app->add_option("--edge-latency-us", c.edge_latency_us, "One-way engine latency; implies edge deployment");
  app->add_option("--checkpoint", c.checkpoint, "Agent parameters to load");
  app->add_flag("--eval-only", c.eval_only, "Never update the agent");
}

bench::ScenarioConfig resolve(const Common& c) {
  bench::ScenarioConfig cfg = c.config.empty() ? bench::ScenarioConfig{} : bench::load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.engine.empty()) cfg.engine.transport = c.engine;
  if (c.edge_latency_us) {
    cfg.engine.deployment = "edge";
    cfg.engine.edge_latency_us = *c.edge_latency_us;
  }
  if (!c.checkpoint.empty()) cfg.training.checkpoint = c.checkpoint;
  if (c.eval_only) cfg.training.eval_only = true;
  cfg.validate();
  return cfg;
}

void write_json(const std::string& path, const nlohmann::json& j) { bench::write_file(path, j.dump(2) + "\n"); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multipath congestion-control simulator and learning agent"};
  app.require_subcommand(1);

  Common common;
  int episodes = 0;
  std::string axis = "loss";
  std::vector<double> values;
  std::vector<std::int64_t> sizes;
  int reps = 1;
  std::string listen;
  int sessions = 0;

  auto* train = app.add_subcommand("train", "Train the agent and save a checkpoint");
  add_common(train, common);
  train->add_option("--episodes", episodes, "Episodes; defaults to training.episodes");

  auto* eval = app.add_subcommand("eval", "Run one scenario and write series.csv + summary.json");
  add_common(eval, common);

  auto* sweep = app.add_subcommand("sweep", "Sweep loss, buffer or edge latency");
  add_common(sweep, common);
  sweep->add_option("--axis", axis, "loss | buffer | edge_latency")->check(CLI::IsMember({"loss", "buffer", "edge_latency"}));
  sweep->add_option("--values", values, "Axis values")->required()->delimiter(',');
  sweep->add_option("--reps", reps, "Repetitions per value");

  auto* fct = app.add_subcommand("fct", "Flow completion times per flow size");
  add_common(fct, common);
  fct->add_option("--sizes", sizes, "Flow sizes in bytes")->required()->delimiter(',');
  fct->add_option("--reps", reps, "Flows per size");

  auto* fair = app.add_subcommand("fairness", "Multipath connection against a single-path flow");
  add_common(fair, common);

  auto* rep = app.add_subcommand("replay", "Rerun a recorded run and compare outputs");
  add_common(rep, common);

  auto* serve = app.add_subcommand("serve", "Host the decision engine behind a socket");
  add_common(serve, common);
  serve->add_option("--listen", listen, "unix:PATH or HOST:PORT")->required();
  serve->add_option("--sessions", sessions, "Sessions to serve, 0 = forever");

  CLI11_PARSE(app, argc, argv);

  try {
    const bench::ScenarioConfig cfg = resolve(common);
    std::filesystem::create_directories(common.out);

    if (train->parsed()) {
      if (!cfg.agent_controlled()) throw std::invalid_argument("cc: training needs dtqn or ddqn");
      auto agent = bench::make_agent(cfg);
      const int n = episodes > 0 ? episodes : cfg.training.episodes;
      const auto rows = bench::train(cfg, *agent, n, [](const bench::EpisodeSummary& s) {
        std::printf("episode %d goodput %.3f Mbps reward %.2f eps %.3f loss %.4g\n", s.episode, s.goodput_bps / 1e6,
                    s.reward_sum, s.epsilon, s.loss);
      });
      bench::write_file(common.out + "/training.csv", bench::to_csv(bench::training_table(rows)));
      const std::vector<double> params(agent->online().begin(), agent->online().end());
      agent::save_checkpoint(common.out + "/checkpoint.bin", agent->network(), params);
      write_json(common.out + "/summary.json", {{"config", bench::to_json(cfg)},
                                                 {"config_hash", bench::config_hash(cfg)},
                                                 {"episodes", n},
                                                 {"train_steps", agent->train_steps()}});
    } else if (eval->parsed()) {
      const auto r = bench::run_scenario(cfg);
      bench::write_run_outputs(common.out, cfg, r);
      std::printf("goodput %.3f Mbps  rtt %.1f us  cv %.3f\n", r.metrics.goodput_bps / 1e6, r.metrics.rtt_mean_us,
                  r.metrics.rtt_cv);
    } else if (sweep->parsed()) {
      const auto a = bench::parse_axis(axis);
      const auto points = bench::sweep(cfg, a, values, reps);
      bench::write_file(common.out + "/sweep.csv", bench::to_csv(bench::sweep_table(a, points)));
      write_json(common.out + "/summary.json",
                 {{"config", bench::to_json(cfg)}, {"config_hash", bench::config_hash(cfg)}, {"axis", axis}});
    } else if (fct->parsed()) {
      const auto stats = bench::fct_experiment(cfg, sizes, reps);
      bench::write_file(common.out + "/fct.csv", bench::to_csv(bench::fct_table(stats)));
      write_json(common.out + "/summary.json", {{"config", bench::to_json(cfg)}, {"config_hash", bench::config_hash(cfg)}});
    } else if (fair->parsed()) {
      const auto r = bench::fairness(cfg);
      bench::write_run_outputs(common.out, cfg, r);
      std::printf("jfi %.4f  multipath %.3f Mbps  competitor %.3f Mbps\n", r.metrics.jfi, r.metrics.goodput_bps / 1e6,
                  r.metrics.competitor_goodput_bps / 1e6);
    } else if (rep->parsed()) {
      const auto report = bench::replay(common.out);
      std::printf("%s\n", report.detail.c_str());
      return report.metrics_match && report.series_match ? 0 : 1;
    } else if (serve->parsed()) {
      auto agent = bench::make_agent(cfg);
      agent->set_training(!cfg.training.eval_only);
      agent::CcEngine engine(*agent, cfg.action);
      telemetry::serve(listen, engine, sessions);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
