#include "mpcc/reward/reward.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mpcc::reward {

namespace {

void require(bool ok, const char* field) {
  if (!ok) throw std::invalid_argument(std::string("invalid reward parameter: ") + field);
}

void require_positive_dmin(double d_min_us) {
  if (!(d_min_us > 0.0)) throw std::invalid_argument("d_min_us must be > 0");
}

}  // namespace

void RewardParams::validate() const {
  require(beta > 0.0, "beta");
  require(beta_scale >= 0.0, "beta_scale");
  require(sigma_us > 0.0, "sigma_us");
  require(kappa > 0.0, "kappa");
  require(w_d > 0.0, "w_d");
  require(w_rho > 0.0, "w_rho");
  require(expflag_period >= 1, "expflag_period");
  require(std::isfinite(g), "g");
  require(std::isfinite(d_floor_us), "d_floor_us");
}

RewardParams RewardParams::bound_to_floor(double d_floor) const {
  RewardParams out = *this;
  out.d_floor_us = d_floor;
  if (beta_scale > 0.0 && d_floor > 0.0) out.beta = beta_scale * d_floor;
  return out;
}

double threshold(double d_min_us, const RewardParams& p) {
  require_positive_dmin(d_min_us);
  double levels = (d_min_us - p.d_floor_us) / p.sigma_us;
  if (p.quantize) levels = std::floor(levels);
  return p.beta * (1.0 + p.g * levels) / d_min_us;
}

double alpha(double d_bar_us, double d_min_us, const RewardParams& p) {
  const double x = d_bar_us / d_min_us - threshold(d_min_us, p);
  return 1.0 / (1.0 + std::exp(-p.kappa * x));
}

double rtt_penalty(double d_bar_us, double d_min_us, const RewardParams& p) {
  const double v = -p.w_d * (d_bar_us / d_min_us - threshold(d_min_us, p));
  return p.clamp_penalty ? std::min(v, 0.0) : v;
}

double tput_reward(double rho_bar, const RewardParams& p) { return p.w_rho * rho_bar; }

SubflowReward subflow_reward(const SubflowStepInput& in, const RewardParams& p) {
  SubflowReward out;
  out.threshold = threshold(in.d_min_us, p);
  out.alpha = alpha(in.d_bar_us, in.d_min_us, p);
  out.p_d = rtt_penalty(in.d_bar_us, in.d_min_us, p);
  out.r_rho = tput_reward(in.rho_bar, p);
  if (in.resulting_cwnd <= in.cwnd_min || in.resulting_cwnd >= in.cwnd_max) {
    out.kind = RewardKind::kBoundary;
    out.r = -1.0;
  } else if (in.expflag) {
    out.kind = RewardKind::kBoundary;
    out.r = in.delta > 0 ? 1.0 : -1.0;
  } else {
    out.kind = RewardKind::kNormal;
    out.r = out.alpha * out.p_d + (1.0 - out.alpha) * out.r_rho;
  }
  return out;
}

double connection_reward(std::span<const SubflowReward> parts) {
  double total = 0.0;
  for (const auto& s : parts) total += s.r;
  return total;
}

ExpflagTracker::ExpflagTracker(int period) : period_(period) {
  if (period < 1) throw std::invalid_argument("expflag period must be >= 1");
}

void ExpflagTracker::on_step(bool increased) {
  if (increased) {
    steps_without_increase_ = 0;
  } else if (steps_without_increase_ < period_) {
    ++steps_without_increase_;
  }
}

}  // namespace mpcc::reward
