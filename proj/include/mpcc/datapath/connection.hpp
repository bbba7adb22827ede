#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "mpcc/datapath/controller.hpp"
#include "mpcc/datapath/subflow.hpp"
#include "mpcc/netsim/link.hpp"
#include "mpcc/netsim/packet.hpp"
#include "mpcc/netsim/simulator.hpp"

namespace mpcc::datapath {

struct DatapathConfig {
  int cwnd_min = 4;
  int initial_cwnd = 4;
  int start_exit_cwnd = 16;
  int start_stable_acks = 8;
  std::int64_t probe_interval_us = 5'000'000;
  int probe_cwnd = 4;
  std::int64_t min_rtt_lifetime_us = 10'000'000;
  std::int64_t max_rate_window_us = 10'000'000;
  int dupack_threshold = 3;
  std::int64_t rto_min_us = 200'000;
  std::int64_t initial_rto_us = 1'000'000;
  bool enable_probe = true;
};

enum class ControlMode { kBaseline, kAgent };

struct AckRecord {
  int subflow_id = 0;
  std::int64_t rtt_us = 0;
  std::int64_t delivered_bytes_delta = 0;
  double delivery_rate_bps = 0.0;
  SimTime at;
};

struct PhaseEvent {
  int subflow_id = 0;
  Phase from = Phase::kStart;
  Phase to = Phase::kStart;
  SimTime at;
};

struct SubflowCounters {
  std::uint64_t packets_sent = 0;       // new data only
  std::uint64_t retransmissions = 0;
  std::uint64_t fast_retransmits = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t dup_acks = 0;
  std::uint64_t ignored_acks = 0;
  std::uint64_t recovery_episodes = 0;
  std::uint64_t clamped_targets = 0;
  std::uint64_t probes = 0;
};

// A multipath connection: M subflows, each bound to one link, sharing one
// application send buffer through the minRTT scheduler. Implements both the
// sender and the receiver side.
class Connection {
 public:
  using AckListener = std::function<void(const AckRecord&)>;
  using PhaseListener = std::function<void(const PhaseEvent&)>;
  using CompletionCallback = std::function<void(SimTime)>;

  Connection(netsim::Simulator& sim, int conn_id, std::vector<netsim::Link*> paths,
             std::vector<int> cwnd_max, DatapathConfig config, ControlMode mode);

  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  void set_controller(CongestionController* controller);
  void add_ack_listener(AckListener listener) { ack_listeners_.push_back(std::move(listener)); }
  void add_phase_listener(PhaseListener listener) { phase_listeners_.push_back(std::move(listener)); }

  // Workload.
  void set_unbounded_backlog();
  void add_app_data(std::int64_t bytes);
  // Invokes `done` once `total_bytes` of application data are acknowledged.
  void track_completion(std::int64_t total_bytes, CompletionCallback done);
  void set_offered_load_bps(double load) { offered_load_bps_ = load; }
  void start();  // first transmission attempt

  // Network-facing entry points, wired to the link sinks.
  void on_data(const netsim::Packet& packet);
  void on_ack(const netsim::Packet& ack);

  // Agent control: stores the target; downward targets apply at once,
  // upward targets are reached one packet per ACK.
  void enforce_cwnd(int i, int target_pkts);
  // Baseline control: sets cwnd directly within [cwnd_min, cwnd_max].
  void set_cwnd(int i, int cwnd_pkts);

  int conn_id() const { return conn_id_; }
  int num_subflows() const { return static_cast<int>(states_.size()); }
  const SubflowState& subflow(int i) const { return states_[static_cast<std::size_t>(i)]; }
  std::span<const SubflowState> states() const { return states_; }
  const SubflowCounters& counters(int i) const { return senders_[static_cast<std::size_t>(i)].counters; }
  ControlMode control_mode() const { return mode_; }
  const DatapathConfig& config() const { return config_; }
  int cwnd_min() const { return config_.cwnd_min; }
  int cwnd_max(int i) const { return cwnd_max_[static_cast<std::size_t>(i)]; }
  netsim::Link& path(int i) { return *paths_[static_cast<std::size_t>(i)]; }
  double offered_load_bps() const { return offered_load_bps_; }

  std::int64_t goodput_bytes() const { return goodput_bytes_; }
  std::int64_t acked_bytes() const { return acked_bytes_; }
  std::int64_t app_backlog_bytes() const { return app_bytes_; }
  bool unbounded_backlog() const { return unbounded_; }
  std::int64_t outstanding_pkts(int i) const;
  std::int64_t snd_una(int i) const { return senders_[static_cast<std::size_t>(i)].snd_una; }
  std::int64_t snd_nxt(int i) const { return senders_[static_cast<std::size_t>(i)].snd_nxt; }

  // Test hooks.
  SubflowState& mutable_subflow(int i) { return states_[static_cast<std::size_t>(i)]; }
  void force_loss_signal(int i, LossSignal signal);

 private:
  struct SentPacket {
    std::int64_t data_seq = 0;
    std::int32_t size_bytes = 0;
    SimTime first_sent;
  };

  struct Sender {
    std::int64_t snd_una = 0;
    std::int64_t snd_nxt = 0;
    std::deque<SentPacket> outstanding;  // index = seq - snd_una
    int dupacks = 0;
    int sacked_out = 0;
    std::int64_t recovery_point = 0;
    // RTO with lazy rescheduling: one pending event per subflow.
    SimTime rto_deadline;
    bool rto_armed = false;
    bool rto_event_pending = false;
    int backoff = 0;
    // Rate sampling.
    SimTime delivered_time;
    // Start phase.
    int clean_acks = 0;
    // Probe phase.
    SimTime last_probe;
    std::int64_t probe_marker = -1;
    int saved_target = 0;
    SubflowCounters counters;
  };

  struct Receiver {
    std::int64_t rcv_nxt = 0;
    std::set<std::int64_t> out_of_order;
  };

  bool has_app_data() const { return unbounded_ || app_bytes_ > 0; }
  void try_send();
  void send_new(int i);
  void transmit(int i, std::int64_t seq, const SentPacket& sp, bool retransmission);
  void retransmit_head(int i);

  void update_rtt(int i, std::int64_t rtt_us, SimTime now);
  void update_delivery_rate(int i, const netsim::Packet& ack, SimTime now);
  void on_new_ack(int i, std::int64_t acked_seq, SimTime now);
  void on_dup_ack(int i, SimTime now);
  void enter_recovery(int i, LossSignal signal, SimTime now);
  void on_agent_new_ack(int i, SimTime now);
  void start_phase_step(int i, SimTime now);
  void maybe_start_probe(int i, SimTime now);
  void finish_probe(int i, std::int64_t rtt_us, SimTime now);
  void set_phase(int i, Phase phase, SimTime now);
  void refresh_inflight(int i);

  std::int64_t rto_us(int i) const;
  void arm_rto(int i, SimTime now);
  void on_rto_event(int i);

  netsim::Simulator& sim_;
  int conn_id_;
  std::vector<netsim::Link*> paths_;
  std::vector<int> cwnd_max_;
  DatapathConfig config_;
  ControlMode mode_;
  CongestionController* controller_ = nullptr;

  std::vector<SubflowState> states_;
  std::vector<Sender> senders_;
  std::vector<Receiver> receivers_;

  bool unbounded_ = false;
  std::int64_t app_bytes_ = 0;
  std::int64_t next_data_seq_ = 0;
  std::int64_t goodput_bytes_ = 0;
  std::int64_t acked_bytes_ = 0;
  std::int64_t completion_bytes_ = -1;
  CompletionCallback completion_;
  double offered_load_bps_ = 0.0;

  std::vector<AckListener> ack_listeners_;
  std::vector<PhaseListener> phase_listeners_;
};

}  // namespace mpcc::datapath
