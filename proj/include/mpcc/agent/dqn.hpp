#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpcc/agent/optimizer.hpp"
#include "mpcc/agent/qnetwork.hpp"
#include "mpcc/agent/replay.hpp"
#include "mpcc/netsim/rng.hpp"

namespace mpcc::agent {

struct AgentConfig {
  std::string arch = "dtqn";  // dtqn (Transformer) | ddqn (MLP, L = 1)
  int d_model = 64;
  int n_blocks = 2;
  int n_heads = 4;
  int d_ff = 128;
  int context_len = 8;
  int mlp_hidden = 0;  // 0: match the default Transformer's parameter count
  int batch = 32;
  double gamma = 0.95;
  double lr = 3e-4;
  int target_sync = 200;
  std::size_t replay_capacity = 50'000;
  double grad_clip = 1.0;
  double eps_start = 1.0;
  double eps_end = 0.05;
  int eps_decay_steps = 5'000;
  int train_every = 1;
  int warmup = 0;  // 0: batch * context_len
  std::uint64_t seed = 1;
  bool reference_kernels = false;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  int effective_warmup() const { return warmup > 0 ? warmup : batch * context_len; }
};

nlohmann::json to_json(const AgentConfig& c);
// Unknown keys are rejected.
AgentConfig agent_config_from_json(const nlohmann::json& j);

std::unique_ptr<QNetwork> build_network(const AgentConfig& cfg, int input_dim, int num_actions);

// Greedy choice: highest value, lowest index on ties.
int argmax(std::span<const double> q);
// With probability eps a uniform action, otherwise argmax. Consumes one
// uniform draw, plus one more when exploring.
int select_action(std::span<const double> q, double eps, netsim::Rng& rng);

// Double-Q targets y = r + gamma (1 - d) Q'(c', argmax_a Q(c', a)).
// Padding rows get 0.
std::vector<double> compute_targets(const QNetwork& net, std::span<const double> online,
                                    std::span<const double> target, const TrajectoryBatch& batch, double gamma);

// Mean squared Bellman error over valid rows. When dq is non-null it
// receives d(loss)/dq for the (batch*len) x A output.
double td_loss(std::span<const double> q, int num_actions, const std::vector<int>& actions,
               const std::vector<std::uint8_t>& valid, std::span<const double> targets, std::vector<double>* dq);

struct TrainResult {
  bool performed = false;
  bool rejected = false;  // non-finite gradient
  double loss = 0.0;
  double grad_norm = 0.0;
};

// Online/target parameter pair, replay, optimizer and the acting context.
class DqnAgent {
 public:
  DqnAgent(AgentConfig cfg, int input_dim, int num_actions);

  const AgentConfig& config() const { return cfg_; }
  const QNetwork& network() const { return *net_; }
  QNetwork& network() { return *net_; }
  std::span<const double> online() const { return online_; }
  std::span<const double> target() const { return target_; }
  std::span<double> mutable_online() { return online_; }
  void set_online(std::span<const double> params);
  void sync_target() { target_ = online_; }

  void set_training(bool on) { training_ = on; }
  bool training() const { return training_; }

  void begin_episode(const std::vector<double>& obs0);
  // Q-values of the current context at its newest step.
  std::vector<double> current_q() const;
  int act(double eps);
  int act();  // uses the scheduled epsilon (greedy when not training)
  // Records (a_t, r_t, d_t, o_{t+1}); trains inline when due.
  void observe(int action, double reward, const std::vector<double>& next_obs, bool done);

  TrainResult train_step();
  // One gradient step on a caller-provided batch (targets recomputed).
  TrainResult train_on(const TrajectoryBatch& batch);

  double epsilon() const;
  std::int64_t env_steps() const { return env_steps_; }
  std::int64_t train_steps() const { return train_steps_; }
  std::int64_t rejected_steps() const { return rejected_steps_; }
  std::int64_t skipped_train_calls() const { return skipped_; }
  double last_loss() const { return last_loss_; }
  const ReplayBuffer& replay() const { return replay_; }

 private:
  ContextBatch context_batch() const;

  AgentConfig cfg_;
  std::unique_ptr<QNetwork> net_;
  std::vector<double> online_;
  std::vector<double> target_;
  std::vector<double> grad_;
  Adam adam_;
  ReplayBuffer replay_;
  netsim::Rng act_rng_;
  netsim::Rng sample_rng_;
  std::deque<std::vector<double>> context_;
  bool training_ = true;
  std::int64_t env_steps_ = 0;
  std::int64_t train_steps_ = 0;
  std::int64_t rejected_steps_ = 0;
  std::int64_t skipped_ = 0;
  double last_loss_ = 0.0;
};

}  // namespace mpcc::agent
