#pragma once

#include <cstdint>

#include "mpcc/netsim/sim_time.hpp"

namespace mpcc::datapath {

using netsim::SimTime;

enum class Mode { kOpen, kRecovery };
enum class Phase { kStart, kTrain, kProbe };

const char* to_string(Mode mode);
const char* to_string(Phase phase);

// Congestion state of one path as seen by the scheduler and the controller.
struct SubflowState {
  int cwnd_pkts = 4;
  int inflight_pkts = 0;  // f_i
  int queued_pkts = 0;    // q_i: handed to the subflow, not yet on the wire
  Mode mode = Mode::kOpen;
  Phase phase = Phase::kStart;

  std::int64_t srtt_us = 0;  // 0 until the first sample
  std::int64_t last_rtt_us = 0;
  std::int64_t min_rtt_us = 0;
  SimTime min_rtt_stamp;
  bool min_rtt_stale = false;
  // Last uncontended sample taken during PROBE; the path's base delay.
  std::int64_t base_rtt_us = 0;

  double max_delivery_rate_bps = 0.0;
  SimTime max_rate_stamp;
  std::int64_t delivered_bytes = 0;
  int expflag_counter = 0;

  int target_cwnd = 0;  // externally supplied target (agent control)

  bool has_rtt() const { return srtt_us > 0; }
};

}  // namespace mpcc::datapath
