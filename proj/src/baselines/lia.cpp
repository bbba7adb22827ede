#include "mpcc/baselines/lia.hpp"

#include <algorithm>
#include <cmath>

namespace mpcc::baselines {

double lia_alpha(std::span<const LiaPath> paths) {
  double total = 0.0;
  double best = 0.0;
  double denom = 0.0;
  for (const auto& p : paths) {
    total += p.cwnd;
    best = std::max(best, p.cwnd / (p.rtt_us * p.rtt_us));
    denom += p.cwnd / p.rtt_us;
  }
  return total * best / (denom * denom);
}

double lia_increase(std::span<const LiaPath> paths, int i) {
  double total = 0.0;
  for (const auto& p : paths) total += p.cwnd;
  const double own = paths[static_cast<std::size_t>(i)].cwnd;
  return std::min(lia_alpha(paths) / total, 1.0 / own);
}

void Lia::attach(datapath::Connection& conn) {
  ssthresh_.assign(static_cast<std::size_t>(conn.num_subflows()), 1 << 30);
  credit_.assign(static_cast<std::size_t>(conn.num_subflows()), 0.0);
}

void Lia::on_ack(datapath::Connection& conn, int i, int acked_pkts, netsim::SimTime) {
  const auto k = static_cast<std::size_t>(i);
  int cwnd = conn.subflow(i).cwnd_pkts;
  for (int a = 0; a < acked_pkts; ++a) {
    if (cwnd < ssthresh_[k]) {
      ++cwnd;
      continue;
    }
    // Subflows without an RTT sample yet do not take part in the coupling.
    std::vector<LiaPath> paths;
    int self = -1;
    for (int j = 0; j < conn.num_subflows(); ++j) {
      const auto& s = conn.subflow(j);
      if (!s.has_rtt() && j != i) continue;
      if (j == i) self = static_cast<int>(paths.size());
      paths.push_back({j == i ? static_cast<double>(cwnd) : s.cwnd_pkts,
                       static_cast<double>(std::max<std::int64_t>(s.srtt_us, 1))});
    }
    credit_[k] += lia_increase(paths, self);
    if (credit_[k] >= 1.0) {
      credit_[k] -= 1.0;
      ++cwnd;
    }
  }
  conn.set_cwnd(i, cwnd);
}

void Lia::on_loss(datapath::Connection& conn, int i, datapath::LossSignal signal, netsim::SimTime) {
  const auto k = static_cast<std::size_t>(i);
  const int cwnd = conn.subflow(i).cwnd_pkts;
  ssthresh_[k] = std::max(cwnd / 2, conn.cwnd_min());
  credit_[k] = 0.0;
  conn.set_cwnd(i, signal == datapath::LossSignal::kTimeout ? conn.cwnd_min() : ssthresh_[k]);
}

}  // namespace mpcc::baselines
