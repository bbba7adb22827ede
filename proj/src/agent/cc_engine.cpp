#include "mpcc/agent/cc_engine.hpp"

#include <algorithm>
#include <stdexcept>

namespace mpcc::agent {

using telemetry::ConnectionObservation;
using telemetry::ControlDirective;

CcEngine::CcEngine(DqnAgent& agent, CcEngineConfig cfg)
    : agent_(agent), cfg_(std::move(cfg)), actions_(1, cfg_.max_steps, cfg_.unit_pkts) {
  cfg_.reward.validate();
}

void CcEngine::hello(const telemetry::Hello& hello) {
  if (hello.num_features != telemetry::kNumFeatures) {
    throw std::invalid_argument("engine expects " + std::to_string(telemetry::kNumFeatures) + " features per subflow");
  }
  actions_ = ActionSpace(hello.num_subflows, cfg_.max_steps, cfg_.unit_pkts);
  const int in = hello.num_subflows * hello.num_features;
  if (agent_.network().input_dim() != in || agent_.network().num_actions() != actions_.size()) {
    throw std::invalid_argument("agent network is " + std::to_string(agent_.network().input_dim()) + " -> " +
                                std::to_string(agent_.network().num_actions()) + ", session needs " +
                                std::to_string(in) + " -> " + std::to_string(actions_.size()));
  }
  cwnd_min_ = hello.cwnd_min;
  cwnd_max_ = hello.cwnd_max;
  in_episode_ = false;
  prev_action_ = -1;
  stats_ = EpisodeStats{};
}

reward::RewardBreakdown CcEngine::score(const ConnectionObservation& obs) const {
  reward::RewardBreakdown out;
  for (std::size_t i = 0; i < obs.subflows.size(); ++i) {
    const auto& s = obs.subflows[i].stats;
    reward::SubflowStepInput in;
    in.d_bar_us = s.mean_rtt_us;
    in.d_min_us = s.min_rtt_us > 0 ? static_cast<double>(s.min_rtt_us) : std::max(1.0, s.mean_rtt_us);
    if (in.d_bar_us <= 0.0) in.d_bar_us = in.d_min_us;
    in.rho_bar = obs.subflows[i].obs.features[telemetry::kThroughput];
    in.delta = pending_[i].delta;
    in.resulting_cwnd = pending_[i].resulting;
    in.cwnd_min = cwnd_min_;
    in.cwnd_max = cwnd_max_[i];
    in.expflag = pending_[i].expflag;
    const auto params = cfg_.bind_floor_to_base_rtt && s.base_rtt_us > 0
                            ? cfg_.reward.bound_to_floor(static_cast<double>(s.base_rtt_us))
                            : cfg_.reward;
    out.subflows.push_back(reward::subflow_reward(in, params));
  }
  out.total = reward::connection_reward(out.subflows);
  return out;
}

ControlDirective CcEngine::decide(const ConnectionObservation& obs) {
  const auto m = cwnd_max_.size();
  if (obs.subflows.size() != m) throw std::invalid_argument("observation has wrong number of subflows");
  const auto x = obs.flatten();
  if (!in_episode_) {
    agent_.begin_episode(x);
    targets_.clear();
    for (const auto& s : obs.subflows) targets_.push_back(s.stats.cwnd_at_close);
    in_episode_ = true;
  } else if (prev_action_ >= 0) {
    last_reward_ = score(obs);
    for (std::size_t i = 0; i < m; ++i) {
      const auto& r = last_reward_.subflows[i];
      if (r.kind != reward::RewardKind::kBoundary) continue;
      const bool at_bound = pending_[i].resulting <= cwnd_min_ || pending_[i].resulting >= cwnd_max_[i];
      if (at_bound) {
        ++stats_.boundary_penalties;
      } else if (r.r > 0) {
        ++stats_.expflag_rewards;
      } else {
        ++stats_.expflag_penalties;
      }
    }
    stats_.reward_sum += last_reward_.total;
    ++stats_.steps;
    agent_.observe(prev_action_, last_reward_.total, x, obs.final);
  }

  ControlDirective d;
  d.step = obs.step;
  if (obs.final) {
    in_episode_ = false;
    prev_action_ = -1;
    d.targets = targets_;
    return d;
  }
  const int a = agent_.act();
  const auto deltas = actions_.decode(a);
  pending_.assign(m, Pending{});
  for (std::size_t i = 0; i < m; ++i) {
    const int t = std::clamp(targets_[i] + cfg_.unit_pkts * deltas[i], cwnd_min_, cwnd_max_[i]);
    pending_[i] = Pending{deltas[i], t, obs.subflows[i].obs.features[telemetry::kExpflag] > 0.5};
    targets_[i] = t;
  }
  prev_action_ = a;
  d.targets = targets_;
  return d;
}

void CcEngine::bye() {
  in_episode_ = false;
  prev_action_ = -1;
}

}  // namespace mpcc::agent
