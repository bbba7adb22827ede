#include "mpcc/baselines/reno.hpp"

#include <algorithm>

namespace mpcc::baselines {

void Reno::attach(datapath::Connection& conn) {
  ssthresh_.assign(static_cast<std::size_t>(conn.num_subflows()), 1 << 30);
  cwnd_cnt_.assign(static_cast<std::size_t>(conn.num_subflows()), 0);
}

void Reno::on_ack(datapath::Connection& conn, int i, int acked_pkts, netsim::SimTime) {
  const auto k = static_cast<std::size_t>(i);
  int cwnd = conn.subflow(i).cwnd_pkts;
  for (int a = 0; a < acked_pkts; ++a) {
    if (cwnd < ssthresh_[k]) {
      ++cwnd;
      continue;
    }
    if (++cwnd_cnt_[k] >= cwnd) {
      cwnd_cnt_[k] = 0;
      ++cwnd;
    }
  }
  conn.set_cwnd(i, cwnd);
}

void Reno::on_loss(datapath::Connection& conn, int i, datapath::LossSignal signal, netsim::SimTime) {
  const auto k = static_cast<std::size_t>(i);
  const int cwnd = conn.subflow(i).cwnd_pkts;
  ssthresh_[k] = std::max(cwnd / 2, conn.cwnd_min());
  cwnd_cnt_[k] = 0;
  conn.set_cwnd(i, signal == datapath::LossSignal::kTimeout ? conn.cwnd_min() : ssthresh_[k]);
}

}  // namespace mpcc::baselines
