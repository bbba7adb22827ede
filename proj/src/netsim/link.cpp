#include "mpcc/netsim/link.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mpcc::netsim {

void LinkSpec::validate() const {
  if (!(rate_bps > 0.0)) throw std::invalid_argument("link.rate_bps must be > 0");
  if (prop_delay_us < 0) throw std::invalid_argument("link.prop_delay_us must be >= 0");
  if (!(loss_prob >= 0.0 && loss_prob <= 1.0)) throw std::invalid_argument("link.loss_prob must be in [0,1]");
  if (buffer_pkts < 1) throw std::invalid_argument("link.buffer_pkts must be >= 1");
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& p = trace[i];
    if (!(p.rate_bps > 0.0))
      throw std::invalid_argument("link.trace[" + std::to_string(i) + "].rate_bps must be > 0");
    if (p.prop_delay_us < 0)
      throw std::invalid_argument("link.trace[" + std::to_string(i) + "].prop_delay_us must be >= 0");
    if (i > 0 && trace[i].at < trace[i - 1].at)
      throw std::invalid_argument("link.trace must be sorted by time");
  }
}

double LinkSpec::max_rate_bps() const {
  double r = rate_bps;
  for (const auto& p : trace) r = std::max(r, p.rate_bps);
  return r;
}

double LinkSpec::min_rate_bps() const {
  double r = rate_bps;
  for (const auto& p : trace) r = std::min(r, p.rate_bps);
  return r;
}

std::int64_t LinkSpec::max_prop_delay_us() const {
  std::int64_t d = prop_delay_us;
  for (const auto& p : trace) d = std::max(d, p.prop_delay_us);
  return d;
}

std::int64_t LinkSpec::min_prop_delay_us() const {
  std::int64_t d = prop_delay_us;
  for (const auto& p : trace) d = std::min(d, p.prop_delay_us);
  return d;
}

Link::Link(Simulator& sim, LinkSpec spec, Rng rng, int id)
    : sim_(sim),
      spec_(std::move(spec)),
      rng_(std::move(rng)),
      id_(id),
      rate_bps_(spec_.rate_bps),
      prop_delay_us_(spec_.prop_delay_us) {
  spec_.validate();
  apply_trace(sim_.now());
}

void Link::apply_trace(SimTime now) {
  // Trace lookups only move forward in time, so a cursor suffices.
  while (trace_index_ < spec_.trace.size() && spec_.trace[trace_index_].at <= now) {
    rate_bps_ = spec_.trace[trace_index_].rate_bps;
    prop_delay_us_ = spec_.trace[trace_index_].prop_delay_us;
    ++trace_index_;
  }
}

std::int64_t Link::serialization_us(std::int32_t size_bytes) const {
  return static_cast<std::int64_t>(std::llround(static_cast<double>(size_bytes) * 8.0 * 1e6 / rate_bps_));
}

void Link::advance_queue_front(SimTime now) {
  while (queue_front_ < transit_.size() && transit_[queue_front_].depart <= now) {
    queued_bytes_ -= transit_[queue_front_].size_bytes;
    ++queue_front_;
  }
}

int Link::in_queue(SimTime now) {
  advance_queue_front(now);
  return static_cast<int>(transit_.size() - queue_front_);
}

int Link::in_flight(SimTime now) {
  advance_queue_front(now);
  return static_cast<int>(queue_front_);
}

QueueState Link::queue_state(SimTime now) {
  advance_queue_front(now);
  return QueueState{static_cast<int>(transit_.size() - queue_front_), queued_bytes_, next_free_at_};
}

bool Link::conservation_holds(SimTime now) {
  const auto queued = static_cast<std::uint64_t>(in_queue(now));
  const auto flying = static_cast<std::uint64_t>(in_flight(now));
  const bool balanced = counters_.enqueued ==
                        counters_.delivered + counters_.dropped_buffer + counters_.dropped_loss + queued + flying;
  return balanced && queued <= static_cast<std::uint64_t>(spec_.buffer_pkts);
}

EnqueueResult Link::enqueue(const Packet& packet, SimTime now) {
  if (packet.size_bytes <= 0 || packet.size_bytes > kMtuBytes) {
    throw std::invalid_argument("packet size must be in (0, MTU]");
  }
  apply_trace(now);
  ++counters_.enqueued;
  if (rng_.bernoulli(spec_.loss_prob)) {
    ++counters_.dropped_loss;
    return {EnqueueStatus::kDroppedRandomLoss, {}, {}};
  }
  advance_queue_front(now);
  const int occupancy = static_cast<int>(transit_.size() - queue_front_);
  if (occupancy >= spec_.buffer_pkts) {
    ++counters_.dropped_buffer;
    return {EnqueueStatus::kDroppedBufferFull, {}, {}};
  }
  const SimTime depart = max(now, next_free_at_) + serialization_us(packet.size_bytes);
  // The pipe is FIFO: a delay decrease never lets a packet overtake.
  const SimTime deliver = max(depart + prop_delay_us_, last_delivery_);
  next_free_at_ = depart;
  last_delivery_ = deliver;
  transit_.push_back(InTransit{depart, deliver, packet.size_bytes});
  queued_bytes_ += packet.size_bytes;
  if (static_cast<int>(transit_.size() - queue_front_) > spec_.buffer_pkts) {
    std::fprintf(stderr, "Link %d: queue bound violated\n", id_);
    std::abort();
  }

  sim_.schedule(deliver, [this, packet] {
    advance_queue_front(sim_.now());
    transit_.pop_front();
    --queue_front_;
    ++counters_.delivered;
    if (data_sink_) data_sink_(packet);
  });
  return {EnqueueStatus::kAccepted, depart, deliver};
}

SimTime Link::send_ack(const Packet& ack, SimTime now) {
  apply_trace(now);
  const SimTime arrive = max(now + prop_delay_us_, last_ack_arrival_);
  last_ack_arrival_ = arrive;
  ++counters_.acks_sent;
  sim_.schedule(arrive, [this, ack] {
    ++counters_.acks_delivered;
    if (ack_sink_) ack_sink_(ack);
  });
  return arrive;
}

}  // namespace mpcc::netsim
