#pragma once

#include <cstdint>
#include <vector>

#include "mpcc/agent/action_space.hpp"
#include "mpcc/agent/dqn.hpp"
#include "mpcc/reward/reward.hpp"
#include "mpcc/telemetry/engine.hpp"

namespace mpcc::agent {

struct CcEngineConfig {
  int max_steps = 2;  // n
  int unit_pkts = 2;  // k
  reward::RewardParams reward;
  // Use each subflow's measured base delay as the reward's RTT floor.
  bool bind_floor_to_base_rtt = true;
};

struct EpisodeStats {
  std::int64_t steps = 0;
  double reward_sum = 0.0;
  std::int64_t boundary_penalties = 0;
  std::int64_t expflag_rewards = 0;
  std::int64_t expflag_penalties = 0;
};

// Decision engine driving a DqnAgent: turns observations into contexts,
// scores the previous action with the hierarchical reward, and maps the
// chosen joint action onto per-subflow cwnd targets.
class CcEngine : public telemetry::DecisionEngine {
 public:
  CcEngine(DqnAgent& agent, CcEngineConfig cfg);

  void hello(const telemetry::Hello& hello) override;
  telemetry::ControlDirective decide(const telemetry::ConnectionObservation& obs) override;
  void bye() override;

  const EpisodeStats& stats() const { return stats_; }
  const reward::RewardBreakdown& last_reward() const { return last_reward_; }
  const CcEngineConfig& config() const { return cfg_; }

  // Reward of the pending action given the observation that followed it.
  reward::RewardBreakdown score(const telemetry::ConnectionObservation& obs) const;

 private:
  struct Pending {
    int delta = 0;
    int resulting = 0;
    bool expflag = false;
  };

  DqnAgent& agent_;
  CcEngineConfig cfg_;
  ActionSpace actions_;
  int cwnd_min_ = 1;
  std::vector<int> cwnd_max_;
  std::vector<int> targets_;
  std::vector<Pending> pending_;
  int prev_action_ = -1;
  bool in_episode_ = false;
  EpisodeStats stats_;
  reward::RewardBreakdown last_reward_;
};

}  // namespace mpcc::agent
