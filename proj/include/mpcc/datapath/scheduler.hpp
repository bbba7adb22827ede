#pragma once

#include <optional>
#include <span>

#include "mpcc/datapath/subflow.hpp"

namespace mpcc::datapath {

// Scheduler availability indicator: window headroom and not recovering.
bool availability(const SubflowState& s);

// minRTT choice among available subflows; ties go to the lowest index.
// std::nullopt means no subflow can take a packet right now.
std::optional<int> pick_subflow(std::span<const SubflowState> subflows);

// Diagnostic coupling model: indicator that subflow i attains the minimum
// RTT among available subflows, divided by the number of available
// subflows. Evaluated literally, so values need not sum to one.
// Throws std::domain_error when no subflow is available.
double allocation_probability(std::span<const SubflowState> subflows, int i);

// Load assigned to subflow i given total offered load (bits/s).
double assigned_load(std::span<const SubflowState> subflows, int i, double offered_load_bps);

}  // namespace mpcc::datapath
