#pragma once

#include <span>
#include <vector>

#include "mpcc/datapath/connection.hpp"
#include "mpcc/datapath/controller.hpp"

namespace mpcc::baselines {

struct LiaPath {
  double cwnd = 0.0;
  double rtt_us = 0.0;
};

// alpha = w_total * max(w_i / rtt_i^2) / (sum w_i / rtt_i)^2
double lia_alpha(std::span<const LiaPath> paths);
// Per-ACK window increase on subflow i: min(alpha / w_total, 1 / w_i).
double lia_increase(std::span<const LiaPath> paths, int i);

// Linked increases: coupled congestion avoidance, per-subflow slow start
// and halving on loss.
class Lia : public datapath::CongestionController {
 public:
  const char* name() const override { return "lia"; }
  void attach(datapath::Connection& conn) override;
  void on_ack(datapath::Connection& conn, int i, int acked_pkts, netsim::SimTime now) override;
  void on_loss(datapath::Connection& conn, int i, datapath::LossSignal signal, netsim::SimTime now) override;

  void set_ssthresh(int i, int v) { ssthresh_[static_cast<std::size_t>(i)] = v; }

 private:
  std::vector<int> ssthresh_;
  std::vector<double> credit_;
};

}  // namespace mpcc::baselines
