#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mpcc::agent {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  Adam(std::size_t n, AdamConfig cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}
  void step(std::span<double> params, std::span<const double> grad);
  std::int64_t steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  std::vector<double> m_;
  std::vector<double> v_;
  std::int64_t t_ = 0;
};

// L2 norm of the whole gradient; NaN/inf propagate.
double global_norm(std::span<const double> grad);
// Rescales grad to norm max_norm when it is larger. Returns the norm before
// clipping.
double clip_global_norm(std::span<double> grad, double max_norm);

}  // namespace mpcc::agent
