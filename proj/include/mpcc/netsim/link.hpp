#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <vector>

#include "mpcc/netsim/packet.hpp"
#include "mpcc/netsim/rng.hpp"
#include "mpcc/netsim/sim_time.hpp"
#include "mpcc/netsim/simulator.hpp"

namespace mpcc::netsim {

struct TracePoint {
  SimTime at;
  double rate_bps = 0.0;
  std::int64_t prop_delay_us = 0;
};

struct LinkSpec {
  double rate_bps = 10e6;
  std::int64_t prop_delay_us = 1000;
  double loss_prob = 0.0;
  int buffer_pkts = 100;
  // Piecewise-constant schedule; the entry with the greatest time <= now wins.
  std::vector<TracePoint> trace;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  double max_rate_bps() const;
  double min_rate_bps() const;
  std::int64_t max_prop_delay_us() const;
  std::int64_t min_prop_delay_us() const;
};

enum class EnqueueStatus { kAccepted, kDroppedBufferFull, kDroppedRandomLoss };

struct EnqueueResult {
  EnqueueStatus status = EnqueueStatus::kAccepted;
  SimTime depart_time;
  SimTime deliver_time;
};

struct QueueState {
  int occupancy_pkts = 0;
  std::int64_t occupancy_bytes = 0;
  SimTime next_free_at;
};

struct LinkCounters {
  std::uint64_t enqueued = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped_buffer = 0;
  std::uint64_t dropped_loss = 0;
  std::uint64_t acks_sent = 0;
  std::uint64_t acks_delivered = 0;
};

// Point-to-point FIFO link: a finite tail-drop buffer feeding a serializer,
// followed by fixed propagation. The reverse direction carries ACKs with
// propagation delay only and never drops them.
class Link {
 public:
  using Sink = std::function<void(const Packet&)>;

  Link(Simulator& sim, LinkSpec spec, Rng rng, int id = 0);

  Link(const Link&) = delete;
  Link& operator=(const Link&) = delete;

  void set_data_sink(Sink sink) { data_sink_ = std::move(sink); }
  void set_ack_sink(Sink sink) { ack_sink_ = std::move(sink); }

  // Random loss is drawn first, then the buffer check. Accepted packets are
  // delivered to the data sink at deliver_time.
  EnqueueResult enqueue(const Packet& packet, SimTime now);
  // Reverse-path ACK; returns its arrival time at the sender.
  SimTime send_ack(const Packet& ack, SimTime now);

  void apply_trace(SimTime now);

  int id() const { return id_; }
  const LinkSpec& spec() const { return spec_; }
  double rate_bps() const { return rate_bps_; }
  std::int64_t prop_delay_us() const { return prop_delay_us_; }
  QueueState queue_state(SimTime now);
  const LinkCounters& counters() const { return counters_; }

  // Packets accepted but not yet delivered, split by whether they still
  // occupy the buffer at `now`.
  int in_queue(SimTime now);
  int in_flight(SimTime now);
  // enqueued == delivered + drops + queued + propagating.
  bool conservation_holds(SimTime now);

  std::int64_t serialization_us(std::int32_t size_bytes) const;

 private:
  struct InTransit {
    SimTime depart;
    SimTime deliver;
    std::int32_t size_bytes;
  };

  void advance_queue_front(SimTime now);

  Simulator& sim_;
  LinkSpec spec_;
  Rng rng_;
  int id_;
  double rate_bps_;
  std::int64_t prop_delay_us_;
  std::size_t trace_index_ = 0;
  SimTime next_free_at_;
  SimTime last_delivery_;
  SimTime last_ack_arrival_;
  // Accepted, undelivered packets in FIFO order; entries before
  // queue_front_ have already departed the buffer.
  std::deque<InTransit> transit_;
  std::size_t queue_front_ = 0;
  std::int64_t queued_bytes_ = 0;
  LinkCounters counters_;
  Sink data_sink_;
  Sink ack_sink_;
};

}  // namespace mpcc::netsim
