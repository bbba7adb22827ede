#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace mpcc::bench {

// (sum x)^2 / (n sum x^2). Throws std::invalid_argument for an empty or
// all-zero input, or negative values.
double jfi(std::span<const double> throughputs);

// Streaming mean / variance (Welford).
class RunningStats {
 public:
  void add(double x);
  std::uint64_t count() const { return n_; }
  double mean() const { return n_ ? mean_ : 0.0; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_) : 0.0; }  // population
  double stddev() const;
  double cv() const;  // stddev / mean, 0 when undefined

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct SeriesRow {
  std::int64_t t_us = 0;  // window end
  int conn = 0;
  int subflow = 0;
  double throughput_bps = 0.0;
  double mean_rtt_us = 0.0;
  std::int64_t acks = 0;
  int cwnd = 0;
  int inflight = 0;
  int queue_pkts = 0;
};

struct RunMetrics {
  double duration_s = 0.0;
  double goodput_bps = 0.0;  // the multipath connection
  std::vector<double> subflow_goodput_bps;
  double rtt_mean_us = 0.0;
  double rtt_std_us = 0.0;
  double rtt_cv = 0.0;
  std::uint64_t rtt_samples = 0;
  std::uint64_t retransmissions = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t drops_buffer = 0;
  std::uint64_t drops_loss = 0;
  std::vector<double> fct_us;
  bool has_competitor = false;
  double competitor_goodput_bps = 0.0;
  double jfi = 0.0;  // 0 when not computed
  std::int64_t decisions = 0;
  std::int64_t stalls = 0;
  double reward_sum = 0.0;
  std::vector<SeriesRow> series;
};

nlohmann::json to_json(const RunMetrics& m);

struct FctStats {
  std::int64_t size_bytes = 0;
  std::size_t count = 0;
  double mean_us = 0.0;
  double median_us = 0.0;
  double p95_us = 0.0;
  double min_us = 0.0;
  double max_us = 0.0;
};

FctStats fct_stats(std::int64_t size_bytes, std::vector<double> samples);
double median(std::vector<double> v);

}  // namespace mpcc::bench
