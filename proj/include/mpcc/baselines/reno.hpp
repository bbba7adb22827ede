#pragma once

#include <vector>

#include "mpcc/datapath/connection.hpp"
#include "mpcc/datapath/controller.hpp"

namespace mpcc::baselines {

// Per-subflow NewReno window growth: slow start below ssthresh, then one
// packet per cwnd of ACKed packets; halve on loss.
class Reno : public datapath::CongestionController {
 public:
  const char* name() const override { return "reno"; }
  void attach(datapath::Connection& conn) override;
  void on_ack(datapath::Connection& conn, int i, int acked_pkts, netsim::SimTime now) override;
  void on_loss(datapath::Connection& conn, int i, datapath::LossSignal signal, netsim::SimTime now) override;

  // Test hooks.
  int ssthresh(int i) const { return ssthresh_[static_cast<std::size_t>(i)]; }
  void set_ssthresh(int i, int v) { ssthresh_[static_cast<std::size_t>(i)] = v; }

 private:
  std::vector<int> ssthresh_;
  std::vector<int> cwnd_cnt_;
};

}  // namespace mpcc::baselines
