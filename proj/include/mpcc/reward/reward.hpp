#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mpcc::reward {

struct RewardParams {
  // Permissible RTT allowance in microseconds. When beta_scale > 0 the
  // engine recomputes beta = beta_scale * d_floor_us per subflow.
  double beta = 15000.0;
  double beta_scale = 1.5;
  double g = 0.05;
  double d_floor_us = 10000.0;
  double sigma_us = 1000.0;
  double kappa = 4.0;
  double w_d = 0.5;
  double w_rho = 1.0;
  int expflag_period = 6;
  bool quantize = true;           // floor((D_min - D_f) / sigma)
  bool clamp_penalty = false;     // force P_D <= 0

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  // Copy with d_floor bound to a measured base delay (and beta rescaled).
  RewardParams bound_to_floor(double d_floor) const;
};

enum class RewardKind { kBoundary, kNormal };

struct SubflowReward {
  RewardKind kind = RewardKind::kNormal;
  double threshold = 0.0;
  double alpha = 0.0;
  double p_d = 0.0;
  double r_rho = 0.0;
  double r = 0.0;
};

struct RewardBreakdown {
  std::vector<SubflowReward> subflows;
  double total = 0.0;
};

// Inputs for one subflow at one decision step.
struct SubflowStepInput {
  double d_bar_us = 0.0;   // smoothed RTT over the window
  double d_min_us = 0.0;   // minimum RTT
  double rho_bar = 0.0;    // throughput normalized to [0,1]
  int delta = 0;           // cwnd change chosen by the action
  int resulting_cwnd = 0;  // target after applying delta and clamping
  int cwnd_min = 0;
  int cwnd_max = 0;
  bool expflag = false;
};

double threshold(double d_min_us, const RewardParams& p);
double alpha(double d_bar_us, double d_min_us, const RewardParams& p);
double rtt_penalty(double d_bar_us, double d_min_us, const RewardParams& p);
double tput_reward(double rho_bar, const RewardParams& p);
SubflowReward subflow_reward(const SubflowStepInput& in, const RewardParams& p);
double connection_reward(std::span<const SubflowReward> parts);

// Raised after `period` consecutive decision steps without a cwnd increase.
class ExpflagTracker {
 public:
  explicit ExpflagTracker(int period = 6);
  // Record one decision step; `increased` is true when the target grew.
  void on_step(bool increased);
  bool flag() const { return steps_without_increase_ >= period_; }
  int steps_without_increase() const { return steps_without_increase_; }
  void reset() { steps_without_increase_ = 0; }

 private:
  int period_;
  int steps_without_increase_ = 0;
};

}  // namespace mpcc::reward
