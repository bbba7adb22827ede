#include "mpcc/telemetry/proxy.hpp"

#include <algorithm>
#include <stdexcept>

namespace mpcc::telemetry {

Proxy::Proxy(netsim::Simulator& sim, datapath::Connection& conn, EngineChannel& channel, ProxyConfig config)
    : sim_(sim), conn_(conn), channel_(channel), config_(std::move(config)) {
  const auto m = static_cast<std::size_t>(conn_.num_subflows());
  if (config_.window_us <= 0) throw std::invalid_argument("window_us must be > 0");
  if (config_.invoke_every < 1) throw std::invalid_argument("invoke_every must be >= 1");
  if (config_.uplink_us < 0 || config_.downlink_us < 0 || config_.compute_us < 0) {
    throw std::invalid_argument("control-loop latencies must be >= 0");
  }
  if (config_.bw_ceiling_bps.size() != m || config_.rtt_ceiling_us.size() != m) {
    throw std::invalid_argument("normalization ceilings need one entry per subflow");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (!(config_.bw_ceiling_bps[i] > 0.0)) throw std::invalid_argument("bw_ceiling_bps must be > 0");
    if (!(config_.rtt_ceiling_us[i] > 0.0)) throw std::invalid_argument("rtt_ceiling_us must be > 0");
  }
  window_acc_.resize(m);
  pooled_acc_.resize(m);
  last_rtt_.assign(m, 0.0);
  expflags_.assign(m, reward::ExpflagTracker(config_.expflag_period));
}

void Proxy::start() {
  conn_.add_ack_listener([this](const datapath::AckRecord& rec) { on_ack(rec); });
  Hello hello;
  hello.num_subflows = conn_.num_subflows();
  hello.num_features = kNumFeatures;
  hello.cwnd_min = conn_.cwnd_min();
  for (int i = 0; i < conn_.num_subflows(); ++i) hello.cwnd_max.push_back(conn_.cwnd_max(i));
  hello.window_us = config_.window_us;
  hello.engine_config = config_.engine_config;
  channel_.open(hello);
  window_start_ = sim_.now();
  pooled_start_ = sim_.now();
  engine_free_at_ = sim_.now();
  sim_.schedule_in(config_.window_us, [this] { on_window_timer(); });
}

void Proxy::on_ack(const datapath::AckRecord& rec) {
  const auto i = static_cast<std::size_t>(rec.subflow_id);
  for (auto* acc : {&window_acc_[i], &pooled_acc_[i]}) {
    acc->bytes += rec.delivered_bytes_delta;
    acc->acks += 1;
    acc->rtt_sum_us += static_cast<double>(rec.rtt_us);
  }
  counted_bytes_ += rec.delivered_bytes_delta;
  counted_acks_ += 1;
}

ConnectionObservation Proxy::build(const std::vector<Accumulator>& acc, SimTime start, SimTime end, bool final) {
  ConnectionObservation out;
  out.step = step_;
  out.at = end;
  out.final = final;
  const double len_s = static_cast<double>(end - start) * 1e-6;
  for (int i = 0; i < conn_.num_subflows(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    const auto& st = conn_.subflow(i);
    SubflowObservation so;
    auto& a = so.stats;
    a.subflow_id = i;
    a.window_start = start;
    a.window_end = end;
    a.ack_count = acc[k].acks;
    a.delivered_bytes = acc[k].bytes;
    a.mean_throughput_bps = len_s > 0.0 ? static_cast<double>(acc[k].bytes) * 8.0 / len_s : 0.0;
    if (acc[k].acks > 0) {
      a.mean_rtt_us = acc[k].rtt_sum_us / static_cast<double>(acc[k].acks);
    } else {
      a.mean_rtt_us = last_rtt_[k] > 0.0 ? last_rtt_[k] : static_cast<double>(st.srtt_us);
    }
    a.cwnd_at_close = st.cwnd_pkts;
    a.min_rtt_us = st.min_rtt_us;
    a.base_rtt_us = st.base_rtt_us;
    a.max_delivery_rate_bps = st.max_delivery_rate_bps;

    const double bw = config_.bw_ceiling_bps[k];
    const double rtt = config_.rtt_ceiling_us[k];
    auto& f = so.obs.features;
    f[kThroughput] = a.mean_throughput_bps / bw;
    f[kRtt] = a.mean_rtt_us / rtt;
    f[kCwnd] = static_cast<double>(a.cwnd_at_close) / static_cast<double>(conn_.cwnd_max(i));
    f[kBottleneckBw] = a.max_delivery_rate_bps / bw;
    f[kBaseDelay] = static_cast<double>(a.base_rtt_us) / rtt;
    f[kExpflag] = expflags_[k].flag() ? 1.0 : 0.0;
    out.subflows.push_back(so);
  }
  return out;
}

ConnectionObservation Proxy::close_window(SimTime now) {
  if (now <= window_start_) throw std::logic_error("close_window: empty window interval");
  auto obs = build(window_acc_, window_start_, now, now >= end_time_);
  for (std::size_t k = 0; k < window_acc_.size(); ++k) {
    last_rtt_[k] = obs.subflows[k].stats.mean_rtt_us;
    window_acc_[k].reset();
  }
  window_start_ = now;
  ++step_;
  if (keep_history_) history_.push_back(obs);
  if (window_listener_) window_listener_(obs);
  return obs;
}

bool Proxy::all_left_start() const {
  for (const auto& s : conn_.states()) {
    if (s.phase == datapath::Phase::kStart) return false;
  }
  return true;
}

bool Proxy::should_invoke() const {
  return dispatch_enabled_ && windows_since_dispatch_ >= config_.invoke_every;
}

void Proxy::on_window_timer() {
  if (finished_) return;
  const SimTime now = sim_.now();
  auto obs = close_window(now);
  ++windows_since_dispatch_;
  if (!dispatch_enabled_ && all_left_start()) {
    dispatch_enabled_ = true;
    windows_since_dispatch_ = config_.invoke_every;
    // Pool from the window that just closed.
    for (std::size_t k = 0; k < pooled_acc_.size(); ++k) pooled_acc_[k] = Accumulator{};
    pooled_start_ = obs.subflows.empty() ? now : obs.subflows[0].stats.window_start;
    for (std::size_t k = 0; k < pooled_acc_.size(); ++k) {
      const auto& a = obs.subflows[k].stats;
      pooled_acc_[k].bytes = a.delivered_bytes;
      pooled_acc_[k].acks = a.ack_count;
      pooled_acc_[k].rtt_sum_us = a.ack_count > 0 ? a.mean_rtt_us * static_cast<double>(a.ack_count) : 0.0;
    }
  }
  if (!dispatch_enabled_) {
    for (auto& a : pooled_acc_) a.reset();
    pooled_start_ = now;
  } else if (should_invoke() || obs.final) {
    if (config_.invoke_every > 1) {
      const std::int64_t step = obs.step;
      const bool final = obs.final;
      obs = build(pooled_acc_, pooled_start_, now, final);
      obs.step = step;
    }
    for (auto& a : pooled_acc_) a.reset();
    pooled_start_ = now;
    windows_since_dispatch_ = 0;
    dispatch(obs);
  }
  if (!obs.final) sim_.schedule_in(config_.window_us, [this] { on_window_timer(); });
}

void Proxy::dispatch(const ConnectionObservation& obs) {
  ++dispatched_;
  if (obs.final) {
    // Nothing can be applied after the episode; deliver synchronously.
    channel_.exchange(obs);
    final_sent_ = true;
    return;
  }
  auto deliver = [this, obs] {
    const SimTime arrive = sim_.now();
    const SimTime begin = max(arrive, engine_free_at_);
    ControlDirective d = channel_.exchange(obs);
    d.step = obs.step;
    d.issued_at = begin + config_.compute_us;
    d.apply_at = d.issued_at + config_.downlink_us;
    engine_free_at_ = d.issued_at;
    DirectiveRecord rec{d.step, obs.at, d.issued_at, d.apply_at, d.targets, false};
    if (d.apply_at - obs.at > config_.stall_windows * config_.window_us) {
      rec.stalled = true;
      ++stalls_;
      directives_.push_back(std::move(rec));
      return;
    }
    directives_.push_back(std::move(rec));
    if (d.apply_at == sim_.now()) {
      apply(d);
    } else {
      sim_.schedule(d.apply_at, [this, d] { apply(d); });
    }
  };
  if (config_.uplink_us == 0) {
    deliver();
  } else {
    sim_.schedule_in(config_.uplink_us, std::move(deliver));
  }
}

void Proxy::apply(const ControlDirective& d) {
  if (finished_) return;
  const int m = conn_.num_subflows();
  if (static_cast<int>(d.targets.size()) != m) throw std::runtime_error("directive has wrong number of targets");
  if (last_targets_.empty()) {
    for (int i = 0; i < m; ++i) last_targets_.push_back(conn_.subflow(i).target_cwnd);
  }
  for (int i = 0; i < m; ++i) {
    const auto k = static_cast<std::size_t>(i);
    const int target = std::clamp(d.targets[k], conn_.cwnd_min(), conn_.cwnd_max(i));
    expflags_[k].on_step(target > last_targets_[k]);
    last_targets_[k] = target;
    conn_.enforce_cwnd(i, target);
  }
}

void Proxy::finish() {
  if (finished_) return;
  const SimTime now = sim_.now();
  if (dispatch_enabled_ && !final_sent_) {
    ConnectionObservation obs;
    if (now > window_start_) {
      end_time_ = now;
      obs = close_window(now);
      if (config_.invoke_every > 1) {
        const std::int64_t step = obs.step;
        obs = build(pooled_acc_, pooled_start_, now, true);
        obs.step = step;
      }
    } else if (!history_.empty() || step_ > 0) {
      obs = build(pooled_acc_, pooled_start_ < now ? pooled_start_ : now - 1, now, true);
      obs.step = step_ - 1;
    }
    obs.final = true;
    dispatch(obs);
  }
  finished_ = true;
  channel_.close();
}

}  // namespace mpcc::telemetry
