#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "mpcc/netsim/sim_time.hpp"

namespace mpcc::telemetry {

using netsim::SimTime;

inline constexpr int kNumFeatures = 6;

enum Feature : int {
  kThroughput = 0,
  kRtt = 1,
  kCwnd = 2,
  kBottleneckBw = 3,
  kBaseDelay = 4,
  kExpflag = 5,
};

// Per-subflow statistics of one observation window [window_start, window_end).
struct WindowAggregate {
  int subflow_id = 0;
  SimTime window_start;
  SimTime window_end;
  double mean_throughput_bps = 0.0;
  double mean_rtt_us = 0.0;  // carried forward when ack_count == 0
  std::int64_t ack_count = 0;
  std::int64_t delivered_bytes = 0;
  int cwnd_at_close = 0;
  std::int64_t min_rtt_us = 0;
  std::int64_t base_rtt_us = 0;
  double max_delivery_rate_bps = 0.0;

  bool operator==(const WindowAggregate&) const = default;
};

struct ObservationVector {
  std::array<double, kNumFeatures> features{};
  bool operator==(const ObservationVector&) const = default;
};

struct SubflowObservation {
  WindowAggregate stats;
  ObservationVector obs;
  bool operator==(const SubflowObservation&) const = default;
};

struct ConnectionObservation {
  std::int64_t step = 0;
  SimTime at;
  bool final = false;  // last observation of the episode
  std::vector<SubflowObservation> subflows;

  bool operator==(const ConnectionObservation&) const = default;
  // Row-major M x kNumFeatures flattening used as the network input token.
  std::vector<double> flatten() const;
};

struct ControlDirective {
  std::int64_t step = 0;
  std::vector<int> targets;  // per-subflow target cwnd in packets
  SimTime issued_at;
  SimTime apply_at;

  bool operator==(const ControlDirective&) const = default;
};

}  // namespace mpcc::telemetry
