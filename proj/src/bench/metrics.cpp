#include "mpcc/bench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpcc::bench {

double jfi(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("jfi of an empty set");
  double s = 0.0;
  double s2 = 0.0;
  for (double v : x) {
    if (v < 0.0 || !std::isfinite(v)) throw std::invalid_argument("jfi needs finite non-negative values");
    s += v;
    s2 += v * v;
  }
  if (s2 == 0.0) throw std::invalid_argument("jfi undefined when every value is zero");
  return s * s / (static_cast<double>(x.size()) * s2);
}

void RunningStats::add(double x) {
  ++n_;
  const double d = x - mean_;
  mean_ += d / static_cast<double>(n_);
  m2_ += d * (x - mean_);
}

double RunningStats::stddev() const { return std::sqrt(variance()); }

double RunningStats::cv() const { return mean() != 0.0 ? stddev() / mean() : 0.0; }

nlohmann::json to_json(const RunMetrics& m) {
  nlohmann::json j{{"duration_s", m.duration_s},
                   {"goodput_bps", m.goodput_bps},
                   {"subflow_goodput_bps", m.subflow_goodput_bps},
                   {"rtt_mean_us", m.rtt_mean_us},
                   {"rtt_std_us", m.rtt_std_us},
                   {"rtt_cv", m.rtt_cv},
                   {"rtt_samples", m.rtt_samples},
                   {"retransmissions", m.retransmissions},
                   {"timeouts", m.timeouts},
                   {"drops_buffer", m.drops_buffer},
                   {"drops_loss", m.drops_loss},
                   {"fct_us", m.fct_us},
                   {"decisions", m.decisions},
                   {"stalls", m.stalls},
                   {"reward_sum", m.reward_sum}};
  if (m.has_competitor) {
    j["competitor_goodput_bps"] = m.competitor_goodput_bps;
    j["jfi"] = m.jfi;
  }
  return j;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

FctStats fct_stats(std::int64_t size_bytes, std::vector<double> samples) {
  FctStats s;
  s.size_bytes = size_bytes;
  s.count = samples.size();
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  double sum = 0.0;
  for (double v : samples) sum += v;
  s.mean_us = sum / static_cast<double>(samples.size());
  s.median_us = median(samples);
  const auto idx = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples.size()))) - 1;
  s.p95_us = samples[std::min(idx, samples.size() - 1)];
  s.min_us = samples.front();
  s.max_us = samples.back();
  return s;
}

}  // namespace mpcc::bench
