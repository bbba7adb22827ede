#include "mpcc/datapath/scheduler.hpp"

#include <stdexcept>

namespace mpcc::datapath {

const char* to_string(Mode mode) { return mode == Mode::kOpen ? "open" : "recovery"; }

const char* to_string(Phase phase) {
  switch (phase) {
    case Phase::kStart:
      return "start";
    case Phase::kTrain:
      return "train";
    case Phase::kProbe:
      return "probe";
  }
  return "?";
}

bool availability(const SubflowState& s) {
  return s.cwnd_pkts > s.queued_pkts + s.inflight_pkts && s.mode != Mode::kRecovery;
}

std::optional<int> pick_subflow(std::span<const SubflowState> subflows) {
  std::optional<int> best;
  for (std::size_t i = 0; i < subflows.size(); ++i) {
    if (!availability(subflows[i])) continue;
    if (!best || subflows[i].srtt_us < subflows[static_cast<std::size_t>(*best)].srtt_us) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

double allocation_probability(std::span<const SubflowState> subflows, int i) {
  int available = 0;
  std::int64_t min_rtt = 0;
  for (const auto& s : subflows) {
    if (!availability(s)) continue;
    if (available == 0 || s.srtt_us < min_rtt) min_rtt = s.srtt_us;
    ++available;
  }
  if (available == 0) throw std::domain_error("allocation_probability: no subflow available");
  const auto& si = subflows[static_cast<std::size_t>(i)];
  // The indicator compares against the minimum over available subflows
  // only; an unavailable subflow can still attain that value.
  const double indicator = si.srtt_us == min_rtt ? 1.0 : 0.0;
  return indicator / available;
}

double assigned_load(std::span<const SubflowState> subflows, int i, double offered_load_bps) {
  return offered_load_bps * allocation_probability(subflows, i);
}

}  // namespace mpcc::datapath
