#include "mpcc/baselines/cubic.hpp"

#include <algorithm>
#include <cmath>

namespace mpcc::baselines {

double cubic_k(double w_max, double c, double reduction) { return std::cbrt(w_max * reduction / c); }

double cubic_window(double t_s, double w_max, double c, double k_s) {
  const double d = t_s - k_s;
  return c * d * d * d + w_max;
}

void Cubic::attach(datapath::Connection& conn) {
  state_.assign(static_cast<std::size_t>(conn.num_subflows()), CubicState{});
}

void Cubic::on_ack(datapath::Connection& conn, int i, int acked_pkts, netsim::SimTime now) {
  auto& s = state_[static_cast<std::size_t>(i)];
  const auto& sf = conn.subflow(i);
  double cwnd = sf.cwnd_pkts;
  const double t_now = now.seconds();
  for (int a = 0; a < acked_pkts; ++a) {
    if (cwnd < s.ssthresh) {
      cwnd += 1.0;
      continue;
    }
    if (s.epoch_start_s < 0.0) {
      s.epoch_start_s = t_now;
      if (cwnd < s.w_max) {
        s.k_s = cubic_k(s.w_max - cwnd, params_.c, 1.0);
        s.origin = s.w_max;
      } else {
        s.k_s = 0.0;
        s.origin = cwnd;
      }
      s.w_est = cwnd;
    }
    const double rtt_s = sf.srtt_us > 0 ? static_cast<double>(sf.srtt_us) * 1e-6 : 0.0;
    const double t = t_now - s.epoch_start_s + rtt_s;
    const double target = cubic_window(t, s.origin, params_.c, s.k_s);
    double inc = target > cwnd ? (target - cwnd) / cwnd : 0.01 / cwnd;
    if (params_.tcp_friendly) {
      const double b = params_.beta_decrease;
      s.w_est += 3.0 * (1.0 - b) / (1.0 + b) / cwnd;
      if (s.w_est > cwnd) inc = std::max(inc, (s.w_est - cwnd) / cwnd);
    }
    s.ack_credit += std::min(inc, 1.0);
    if (s.ack_credit >= 1.0) {
      const double whole = std::floor(s.ack_credit);
      cwnd += whole;
      s.ack_credit -= whole;
    }
  }
  conn.set_cwnd(i, static_cast<int>(std::min<double>(cwnd, conn.cwnd_max(i))));
}

void Cubic::on_loss(datapath::Connection& conn, int i, datapath::LossSignal signal, netsim::SimTime) {
  auto& s = state_[static_cast<std::size_t>(i)];
  const double cwnd = conn.subflow(i).cwnd_pkts;
  s.w_max = cwnd;
  s.epoch_start_s = -1.0;
  s.ack_credit = 0.0;
  const int reduced = std::max(static_cast<int>(cwnd * params_.beta_decrease), conn.cwnd_min());
  s.ssthresh = reduced;
  conn.set_cwnd(i, signal == datapath::LossSignal::kTimeout ? conn.cwnd_min() : reduced);
}

}  // namespace mpcc::baselines
