#pragma once

#include <vector>

#include "mpcc/datapath/connection.hpp"
#include "mpcc/datapath/controller.hpp"

namespace mpcc::baselines {

// Parameterization: on loss cwnd <- beta_decrease * w_max, so the cubic
// plateau distance uses the reduction (1 - beta_decrease).
struct CubicParams {
  double c = 0.4;
  double beta_decrease = 0.7;
  bool tcp_friendly = true;
};

struct CubicState {
  double w_max = 0.0;
  double k_s = 0.0;
  double epoch_start_s = -1.0;  // < 0: no epoch yet
  double origin = 0.0;
  double w_est = 0.0;
  double ack_credit = 0.0;
  int ssthresh = 1 << 30;
};

// Time (s) for the cubic to return to w_max after a reduction by `reduction`.
double cubic_k(double w_max, double c, double reduction);
// W(t) = c (t - K)^3 + w_max, t in seconds since the epoch.
double cubic_window(double t_s, double w_max, double c, double k_s);

class Cubic : public datapath::CongestionController {
 public:
  explicit Cubic(CubicParams params = {}) : params_(params) {}
  const char* name() const override { return "cubic"; }
  void attach(datapath::Connection& conn) override;
  void on_ack(datapath::Connection& conn, int i, int acked_pkts, netsim::SimTime now) override;
  void on_loss(datapath::Connection& conn, int i, datapath::LossSignal signal, netsim::SimTime now) override;

  const CubicState& state(int i) const { return state_[static_cast<std::size_t>(i)]; }
  CubicState& mutable_state(int i) { return state_[static_cast<std::size_t>(i)]; }

 private:
  CubicParams params_;
  std::vector<CubicState> state_;
};

}  // namespace mpcc::baselines
