#pragma once

#include <vector>

#include "mpcc/agent/dqn.hpp"
#include "mpcc/netsim/rng.hpp"

namespace mpcc::testing {

// Cue recall: the first observation shows one of two cues, then `delay`
// blank observations follow, then a query. Only the action at the query
// is scored (+1 for naming the cue, -1 otherwise), so a policy that sees
// one observation at a time can do no better than chance there.
class CueRecall {
 public:
  static constexpr int kObsDim = 3;
  static constexpr int kActions = 2;

  explicit CueRecall(int delay = 2) : delay_(delay) {}

  std::vector<double> reset(netsim::Rng& rng) {
    cue_ = static_cast<int>(rng.below(2));
    t_ = 0;
    return observation();
  }

  struct Step {
    std::vector<double> obs;
    double reward = 0.0;
    bool done = false;
  };

  Step step(int action) {
    Step s;
    if (at_query()) {
      s.reward = action == cue_ ? 1.0 : -1.0;
      s.done = true;
      s.obs = std::vector<double>(kObsDim, 0.0);
      return s;
    }
    ++t_;
    s.obs = observation();
    return s;
  }

  bool at_query() const { return t_ == delay_ + 1; }
  int cue() const { return cue_; }

 private:
  std::vector<double> observation() const {
    std::vector<double> o(kObsDim, 0.0);
    if (t_ == 0) o[static_cast<std::size_t>(cue_)] = 1.0;
    if (at_query()) o[2] = 1.0;
    return o;
  }

  int delay_;
  int cue_ = 0;
  int t_ = 0;
};

struct PomdpResult {
  double optimal_rate = 0.0;  // greedy query actions naming the cue
  std::int64_t train_steps = 0;
};

// Trains `cfg` on CueRecall for `episodes` episodes, then evaluates the
// greedy policy on `eval_episodes` fresh episodes.
inline PomdpResult train_and_eval_pomdp(const agent::AgentConfig& cfg, int episodes, int eval_episodes,
                                        int delay = 2) {
  agent::DqnAgent agent(cfg, CueRecall::kObsDim, CueRecall::kActions);
  netsim::Rng env_rng(netsim::derive_seed(cfg.seed, {netsim::streams::kWorkload, 9}));
  CueRecall env(delay);
  agent.set_training(true);
  for (int e = 0; e < episodes; ++e) {
    agent.begin_episode(env.reset(env_rng));
    for (;;) {
      const int a = agent.act();
      const auto s = env.step(a);
      agent.observe(a, s.reward, s.obs, s.done);
      if (s.done) break;
    }
  }
  agent.set_training(false);
  int hits = 0;
  for (int e = 0; e < eval_episodes; ++e) {
    agent.begin_episode(env.reset(env_rng));
    while (!env.at_query()) {
      const int a = agent.act(0.0);
      agent.observe(a, 0.0, env.step(a).obs, false);
    }
    hits += agent.act(0.0) == env.cue() ? 1 : 0;
  }
  return {static_cast<double>(hits) / eval_episodes, agent.train_steps()};
}

}  // namespace mpcc::testing
