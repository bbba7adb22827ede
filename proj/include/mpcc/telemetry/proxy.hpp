#pragma once

#include <cstdint>
#include <climits>
#include <functional>
#include <vector>

#include "mpcc/datapath/connection.hpp"
#include "mpcc/netsim/simulator.hpp"
#include "mpcc/reward/reward.hpp"
#include "mpcc/telemetry/engine.hpp"
#include "mpcc/telemetry/observation.hpp"

namespace mpcc::telemetry {

struct ProxyConfig {
  std::int64_t window_us = 10'000;
  // 1: invoke after every window (sequence model). K > 1: invoke every K
  // windows with statistics pooled over those K windows.
  int invoke_every = 1;
  std::int64_t uplink_us = 0;
  std::int64_t downlink_us = 0;
  // Optional sim-time charged per engine call.
  std::int64_t compute_us = 0;
  // Directives arriving later than this many windows after their
  // observation closed are dropped and counted as stalls.
  int stall_windows = 10;
  int expflag_period = 6;
  // Per-subflow normalization denominators; must be positive.
  std::vector<double> bw_ceiling_bps;
  std::vector<double> rtt_ceiling_us;
  nlohmann::json engine_config = nlohmann::json::object();
};

struct DirectiveRecord {
  std::int64_t step = 0;
  SimTime window_end;
  SimTime issued_at;
  SimTime apply_at;
  std::vector<int> targets;
  bool stalled = false;
};

// Sits between a connection and a decision engine: windows per-ACK records,
// builds observations, invokes the engine and applies its directives after
// the configured control-loop latency.
class Proxy {
 public:
  using WindowListener = std::function<void(const ConnectionObservation&)>;

  Proxy(netsim::Simulator& sim, datapath::Connection& conn, EngineChannel& channel, ProxyConfig config);
  Proxy(const Proxy&) = delete;
  Proxy& operator=(const Proxy&) = delete;

  // Sends Hello and schedules the first window close.
  void start();
  // The window closing at or after `end` is sent as the final observation.
  void set_end_time(SimTime end) { end_time_ = end; }
  // Sends the final observation if it has not gone out yet, then Bye.
  void finish();

  // Closes the current window at `now` and returns its observation.
  ConnectionObservation close_window(SimTime now);
  bool should_invoke() const;
  void dispatch(const ConnectionObservation& obs);

  void set_window_listener(WindowListener l) { window_listener_ = std::move(l); }

  const std::vector<DirectiveRecord>& directives() const { return directives_; }
  const std::vector<ConnectionObservation>& window_history() const { return history_; }
  void keep_history(bool keep) { keep_history_ = keep; }
  std::int64_t step() const { return step_; }
  std::int64_t stalls() const { return stalls_; }
  std::int64_t dispatched() const { return dispatched_; }
  std::int64_t counted_bytes() const { return counted_bytes_; }
  std::int64_t counted_acks() const { return counted_acks_; }
  bool expflag(int i) const { return expflags_[static_cast<std::size_t>(i)].flag(); }
  const ProxyConfig& config() const { return config_; }

 private:
  struct Accumulator {
    std::int64_t bytes = 0;
    std::int64_t acks = 0;
    double rtt_sum_us = 0.0;
    void reset() { *this = Accumulator{}; }
  };

  void on_ack(const datapath::AckRecord& rec);
  void on_window_timer();
  ConnectionObservation build(const std::vector<Accumulator>& acc, SimTime start, SimTime end, bool final);
  void apply(const ControlDirective& d);
  bool all_left_start() const;

  netsim::Simulator& sim_;
  datapath::Connection& conn_;
  EngineChannel& channel_;
  ProxyConfig config_;

  std::vector<Accumulator> window_acc_;
  std::vector<Accumulator> pooled_acc_;
  std::vector<double> last_rtt_;
  std::vector<reward::ExpflagTracker> expflags_;
  std::vector<int> last_targets_;
  SimTime window_start_;
  SimTime pooled_start_;
  int windows_since_dispatch_ = 0;
  bool dispatch_enabled_ = false;
  bool finished_ = false;
  bool final_sent_ = false;
  SimTime end_time_ = SimTime(INT64_MAX);
  SimTime engine_free_at_;
  std::int64_t step_ = 0;
  std::int64_t stalls_ = 0;
  std::int64_t dispatched_ = 0;
  std::int64_t counted_bytes_ = 0;
  std::int64_t counted_acks_ = 0;
  std::vector<DirectiveRecord> directives_;
  std::vector<ConnectionObservation> history_;
  bool keep_history_ = false;
  WindowListener window_listener_;
};

}  // namespace mpcc::telemetry
