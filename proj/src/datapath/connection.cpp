#include "mpcc/datapath/connection.hpp"

#include <algorithm>
#include <stdexcept>

#include "mpcc/datapath/scheduler.hpp"

namespace mpcc::datapath {

using netsim::Packet;

Connection::Connection(netsim::Simulator& sim, int conn_id, std::vector<netsim::Link*> paths,
                       std::vector<int> cwnd_max, DatapathConfig config, ControlMode mode)
    : sim_(sim),
      conn_id_(conn_id),
      paths_(std::move(paths)),
      cwnd_max_(std::move(cwnd_max)),
      config_(config),
      mode_(mode) {
  if (paths_.empty()) throw std::invalid_argument("connection needs at least one subflow");
  if (cwnd_max_.size() != paths_.size()) throw std::invalid_argument("cwnd_max must have one entry per subflow");
  if (config_.cwnd_min < 1) throw std::invalid_argument("cwnd_min must be >= 1");
  for (int& m : cwnd_max_) m = std::max(m, config_.cwnd_min);

  states_.resize(paths_.size());
  senders_.resize(paths_.size());
  receivers_.resize(paths_.size());
  for (std::size_t i = 0; i < states_.size(); ++i) {
    auto& s = states_[i];
    s.cwnd_pkts = std::clamp(config_.initial_cwnd, config_.cwnd_min, cwnd_max_[i]);
    s.phase = Phase::kStart;
    s.target_cwnd = s.cwnd_pkts;
  }
}

void Connection::set_controller(CongestionController* controller) {
  controller_ = controller;
  if (controller_) controller_->attach(*this);
}

void Connection::set_unbounded_backlog() { unbounded_ = true; }

void Connection::add_app_data(std::int64_t bytes) {
  if (bytes <= 0) return;
  app_bytes_ += bytes;
  try_send();
}

void Connection::track_completion(std::int64_t total_bytes, CompletionCallback done) {
  completion_bytes_ = total_bytes;
  completion_ = std::move(done);
}

void Connection::start() { try_send(); }

std::int64_t Connection::outstanding_pkts(int i) const {
  const auto& sf = senders_[static_cast<std::size_t>(i)];
  return sf.snd_nxt - sf.snd_una;
}

void Connection::refresh_inflight(int i) {
  const auto& sf = senders_[static_cast<std::size_t>(i)];
  const auto outstanding = static_cast<int>(sf.snd_nxt - sf.snd_una);
  states_[static_cast<std::size_t>(i)].inflight_pkts = std::max(0, outstanding - sf.sacked_out);
}

// ---------------------------------------------------------------------------
// Sending

void Connection::try_send() {
  while (has_app_data()) {
    const auto j = pick_subflow(states_);
    if (!j) break;
    send_new(*j);
  }
}

void Connection::send_new(int i) {
  auto& sf = senders_[static_cast<std::size_t>(i)];
  std::int32_t size = netsim::kMtuBytes;
  if (!unbounded_) {
    size = static_cast<std::int32_t>(std::min<std::int64_t>(app_bytes_, netsim::kMtuBytes));
    app_bytes_ -= size;
  }
  SentPacket sp{next_data_seq_++, size, sim_.now()};
  const std::int64_t seq = sf.snd_nxt++;
  sf.outstanding.push_back(sp);
  ++sf.counters.packets_sent;
  auto& st = states_[static_cast<std::size_t>(i)];
  if (st.phase == Phase::kProbe && sf.probe_marker < 0) sf.probe_marker = seq;
  transmit(i, seq, sp, false);
  refresh_inflight(i);
}

void Connection::transmit(int i, std::int64_t seq, const SentPacket& sp, bool retransmission) {
  auto& sf = senders_[static_cast<std::size_t>(i)];
  const auto& st = states_[static_cast<std::size_t>(i)];
  const SimTime now = sim_.now();
  // An empty pipe restarts the delivery-rate interval.
  if (st.inflight_pkts == 0 && !retransmission) sf.delivered_time = now;
  Packet p;
  p.conn_id = conn_id_;
  p.subflow_id = i;
  p.seq = seq;
  p.size_bytes = sp.size_bytes;
  p.sent_at = now;
  p.retransmission = retransmission;
  p.delivered_bytes_at_send = st.delivered_bytes;
  p.delivered_time_at_send = sf.delivered_time;
  paths_[static_cast<std::size_t>(i)]->enqueue(p, now);
  if (!sf.rto_armed) arm_rto(i, now);
}

void Connection::retransmit_head(int i) {
  auto& sf = senders_[static_cast<std::size_t>(i)];
  if (sf.outstanding.empty()) return;
  ++sf.counters.retransmissions;
  transmit(i, sf.snd_una, sf.outstanding.front(), true);
}

// ---------------------------------------------------------------------------
// Receiver

void Connection::on_data(const Packet& packet) {
  auto& rx = receivers_[static_cast<std::size_t>(packet.subflow_id)];
  bool fresh = false;
  if (packet.seq == rx.rcv_nxt) {
    fresh = true;
    ++rx.rcv_nxt;
    while (!rx.out_of_order.empty() && *rx.out_of_order.begin() == rx.rcv_nxt) {
      rx.out_of_order.erase(rx.out_of_order.begin());
      ++rx.rcv_nxt;
    }
  } else if (packet.seq > rx.rcv_nxt) {
    fresh = rx.out_of_order.insert(packet.seq).second;
  }
  if (fresh) goodput_bytes_ += packet.size_bytes;

  Packet ack;
  ack.conn_id = conn_id_;
  ack.subflow_id = packet.subflow_id;
  ack.is_ack = true;
  ack.size_bytes = 64;
  ack.acked_seq = rx.rcv_nxt;
  ack.echo_seq = packet.seq;
  ack.echo_sent_at = packet.sent_at;
  ack.echo_size_bytes = packet.size_bytes;
  ack.echo_new_data = fresh;
  ack.delivered_bytes_at_send = packet.delivered_bytes_at_send;
  ack.delivered_time_at_send = packet.delivered_time_at_send;
  ack.retransmission = packet.retransmission;
  paths_[static_cast<std::size_t>(packet.subflow_id)]->send_ack(ack, sim_.now());
}

// ---------------------------------------------------------------------------
// Sender ACK processing

void Connection::update_rtt(int i, std::int64_t rtt_us, SimTime now) {
  auto& st = states_[static_cast<std::size_t>(i)];
  st.last_rtt_us = rtt_us;
  st.srtt_us = st.srtt_us == 0 ? rtt_us : st.srtt_us + (rtt_us - st.srtt_us) / 8;
  if (st.min_rtt_us == 0 || rtt_us <= st.min_rtt_us) {
    st.min_rtt_us = rtt_us;
    st.min_rtt_stamp = now;
    st.min_rtt_stale = false;
  } else if (now - st.min_rtt_stamp > config_.min_rtt_lifetime_us) {
    if (mode_ == ControlMode::kAgent && config_.enable_probe) {
      // Refreshed by the next PROBE.
      st.min_rtt_stale = true;
    } else {
      st.min_rtt_us = rtt_us;
      st.min_rtt_stamp = now;
      st.min_rtt_stale = false;
    }
  }
  if (st.base_rtt_us == 0) st.base_rtt_us = st.min_rtt_us;
}

void Connection::update_delivery_rate(int i, const Packet& ack, SimTime now) {
  auto& st = states_[static_cast<std::size_t>(i)];
  auto& sf = senders_[static_cast<std::size_t>(i)];
  st.delivered_bytes += ack.echo_size_bytes;
  sf.delivered_time = now;
  const std::int64_t interval = now - ack.delivered_time_at_send;
  if (interval <= 0) return;
  const double rate = static_cast<double>(st.delivered_bytes - ack.delivered_bytes_at_send) * 8.0 * 1e6 /
                      static_cast<double>(interval);
  if (rate >= st.max_delivery_rate_bps || now - st.max_rate_stamp > config_.max_rate_window_us) {
    st.max_delivery_rate_bps = rate;
    st.max_rate_stamp = now;
  }
}

void Connection::on_ack(const Packet& ack) {
  const int i = ack.subflow_id;
  auto& sf = senders_[static_cast<std::size_t>(i)];
  const SimTime now = sim_.now();
  const bool stale = ack.acked_seq < sf.snd_una || ack.acked_seq > sf.snd_nxt;
  const bool idle_dup = ack.acked_seq == sf.snd_una && sf.snd_nxt == sf.snd_una;
  if (stale || idle_dup) {
    ++sf.counters.ignored_acks;
    return;
  }

  const std::int64_t rtt = now - ack.echo_sent_at;
  update_rtt(i, rtt, now);
  std::int64_t delta = 0;
  double rate = 0.0;
  if (ack.echo_new_data) {
    update_delivery_rate(i, ack, now);
    delta = ack.echo_size_bytes;
    const std::int64_t interval = now - ack.delivered_time_at_send;
    if (interval > 0) {
      rate = static_cast<double>(states_[static_cast<std::size_t>(i)].delivered_bytes - ack.delivered_bytes_at_send) *
             8.0 * 1e6 / static_cast<double>(interval);
    }
  }
  for (const auto& l : ack_listeners_) l(AckRecord{i, rtt, delta, rate, now});

  if (ack.acked_seq > sf.snd_una) {
    on_new_ack(i, ack.acked_seq, now);
  } else {
    on_dup_ack(i, now);
  }

  auto& st = states_[static_cast<std::size_t>(i)];
  if (st.phase == Phase::kProbe && sf.probe_marker >= 0 && ack.echo_seq >= sf.probe_marker) {
    finish_probe(i, rtt, now);
  }
  try_send();
}

void Connection::on_new_ack(int i, std::int64_t acked_seq, SimTime now) {
  auto& sf = senders_[static_cast<std::size_t>(i)];
  auto& st = states_[static_cast<std::size_t>(i)];
  const auto newly = static_cast<int>(acked_seq - sf.snd_una);
  for (int k = 0; k < newly; ++k) {
    acked_bytes_ += sf.outstanding.front().size_bytes;
    sf.outstanding.pop_front();
  }
  sf.snd_una = acked_seq;
  sf.sacked_out = std::max(0, sf.sacked_out - (newly - 1));
  sf.dupacks = 0;
  sf.backoff = 0;
  if (sf.snd_una == sf.snd_nxt) {
    sf.rto_armed = false;
    sf.sacked_out = 0;
  } else {
    arm_rto(i, now);
  }

  if (st.mode == Mode::kRecovery) {
    if (sf.snd_una >= sf.recovery_point) {
      st.mode = Mode::kOpen;
      sf.sacked_out = 0;
    } else {
      // Partial ACK: the next hole is lost as well.
      retransmit_head(i);
    }
  } else if (mode_ == ControlMode::kBaseline) {
    if (controller_) controller_->on_ack(*this, i, newly, now);
  }
  if (mode_ == ControlMode::kAgent) on_agent_new_ack(i, now);
  refresh_inflight(i);

  if (completion_ && completion_bytes_ >= 0 && acked_bytes_ >= completion_bytes_) {
    auto done = std::move(completion_);
    completion_ = nullptr;
    done(now);
  }
}

void Connection::on_dup_ack(int i, SimTime now) {
  auto& sf = senders_[static_cast<std::size_t>(i)];
  auto& st = states_[static_cast<std::size_t>(i)];
  ++sf.counters.dup_acks;
  ++sf.dupacks;
  const auto outstanding = static_cast<int>(sf.snd_nxt - sf.snd_una);
  sf.sacked_out = std::min(sf.sacked_out + 1, std::max(0, outstanding - 1));
  if (st.mode == Mode::kOpen && sf.dupacks == config_.dupack_threshold) {
    ++sf.counters.fast_retransmits;
    enter_recovery(i, LossSignal::kDupAcks, now);
  }
  refresh_inflight(i);
}

void Connection::enter_recovery(int i, LossSignal signal, SimTime now) {
  auto& sf = senders_[static_cast<std::size_t>(i)];
  auto& st = states_[static_cast<std::size_t>(i)];
  if (st.mode == Mode::kOpen) ++sf.counters.recovery_episodes;
  st.mode = Mode::kRecovery;
  sf.recovery_point = sf.snd_nxt;
  retransmit_head(i);
  if (mode_ == ControlMode::kBaseline) {
    if (controller_) controller_->on_loss(*this, i, signal, now);
  } else if (st.phase == Phase::kStart) {
    sf.clean_acks = 0;
    st.cwnd_pkts = std::max(st.cwnd_pkts / 2, config_.cwnd_min);
  }
  refresh_inflight(i);
}

void Connection::force_loss_signal(int i, LossSignal signal) {
  enter_recovery(i, signal, sim_.now());
}

// ---------------------------------------------------------------------------
// Agent-controlled phases

void Connection::set_phase(int i, Phase phase, SimTime now) {
  auto& st = states_[static_cast<std::size_t>(i)];
  if (st.phase == phase) return;
  const Phase from = st.phase;
  st.phase = phase;
  for (const auto& l : phase_listeners_) l(PhaseEvent{i, from, phase, now});
}

void Connection::on_agent_new_ack(int i, SimTime now) {
  auto& st = states_[static_cast<std::size_t>(i)];
  switch (st.phase) {
    case Phase::kStart:
      if (st.mode == Mode::kOpen) start_phase_step(i, now);
      break;
    case Phase::kTrain:
      if (st.cwnd_pkts < st.target_cwnd) ++st.cwnd_pkts;
      maybe_start_probe(i, now);
      break;
    case Phase::kProbe:
      break;
  }
}

void Connection::start_phase_step(int i, SimTime now) {
  auto& sf = senders_[static_cast<std::size_t>(i)];
  auto& st = states_[static_cast<std::size_t>(i)];
  st.cwnd_pkts = std::min(st.cwnd_pkts + 1, cwnd_max(i));
  ++sf.clean_acks;
  if (st.cwnd_pkts >= std::min(config_.start_exit_cwnd, cwnd_max(i)) && sf.clean_acks >= config_.start_stable_acks) {
    st.target_cwnd = st.cwnd_pkts;
    sf.last_probe = now;
    if (st.base_rtt_us == 0) st.base_rtt_us = st.min_rtt_us;
    set_phase(i, Phase::kTrain, now);
  }
}

void Connection::maybe_start_probe(int i, SimTime now) {
  if (!config_.enable_probe) return;
  auto& sf = senders_[static_cast<std::size_t>(i)];
  auto& st = states_[static_cast<std::size_t>(i)];
  if (now - sf.last_probe < config_.probe_interval_us && !st.min_rtt_stale) return;
  ++sf.counters.probes;
  sf.saved_target = st.target_cwnd;
  sf.probe_marker = -1;
  st.cwnd_pkts = std::max(config_.probe_cwnd, config_.cwnd_min);
  set_phase(i, Phase::kProbe, now);
}

void Connection::finish_probe(int i, std::int64_t rtt_us, SimTime now) {
  auto& sf = senders_[static_cast<std::size_t>(i)];
  auto& st = states_[static_cast<std::size_t>(i)];
  st.base_rtt_us = rtt_us;
  if (st.min_rtt_stale || rtt_us < st.min_rtt_us) {
    st.min_rtt_us = rtt_us;
    st.min_rtt_stale = false;
  }
  st.min_rtt_stamp = now;
  sf.last_probe = now;
  sf.probe_marker = -1;
  st.target_cwnd = sf.saved_target;
  st.cwnd_pkts = sf.saved_target;
  set_phase(i, Phase::kTrain, now);
}

void Connection::enforce_cwnd(int i, int target_pkts) {
  auto& st = states_[static_cast<std::size_t>(i)];
  auto& sf = senders_[static_cast<std::size_t>(i)];
  const int clamped = std::clamp(target_pkts, config_.cwnd_min, cwnd_max(i));
  if (clamped != target_pkts) ++sf.counters.clamped_targets;
  switch (st.phase) {
    case Phase::kStart:
      st.target_cwnd = clamped;
      break;
    case Phase::kTrain:
      st.target_cwnd = clamped;
      if (clamped < st.cwnd_pkts) st.cwnd_pkts = clamped;
      break;
    case Phase::kProbe:
      sf.saved_target = clamped;
      break;
  }
  try_send();
}

void Connection::set_cwnd(int i, int cwnd_pkts) {
  states_[static_cast<std::size_t>(i)].cwnd_pkts = std::clamp(cwnd_pkts, config_.cwnd_min, cwnd_max(i));
}

// ---------------------------------------------------------------------------
// Retransmission timer

std::int64_t Connection::rto_us(int i) const {
  const auto& st = states_[static_cast<std::size_t>(i)];
  const auto& sf = senders_[static_cast<std::size_t>(i)];
  std::int64_t base = st.srtt_us == 0 ? config_.initial_rto_us : std::max(config_.rto_min_us, 2 * st.srtt_us);
  const int shift = std::min(sf.backoff, 8);
  return std::min<std::int64_t>(base << shift, 60'000'000);
}

void Connection::arm_rto(int i, SimTime now) {
  auto& sf = senders_[static_cast<std::size_t>(i)];
  sf.rto_armed = true;
  sf.rto_deadline = now + rto_us(i);
  if (!sf.rto_event_pending) {
    sf.rto_event_pending = true;
    sim_.schedule(sf.rto_deadline, [this, i] { on_rto_event(i); });
  }
}

void Connection::on_rto_event(int i) {
  auto& sf = senders_[static_cast<std::size_t>(i)];
  sf.rto_event_pending = false;
  if (!sf.rto_armed || sf.snd_una == sf.snd_nxt) return;
  const SimTime now = sim_.now();
  if (now < sf.rto_deadline) {
    sf.rto_event_pending = true;
    sim_.schedule(sf.rto_deadline, [this, i] { on_rto_event(i); });
    return;
  }
  ++sf.counters.timeouts;
  ++sf.backoff;
  sf.dupacks = 0;
  sf.sacked_out = 0;
  enter_recovery(i, LossSignal::kTimeout, now);
  arm_rto(i, now);
  try_send();
}

}  // namespace mpcc::datapath
