#include <cmath>

#include "mpcc/agent/optimizer.hpp"

namespace mpcc::agent {

void Adam::step(std::span<double> params, std::span<const double> grad) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
    params[i] -= cfg_.lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.eps);
  }
}

double global_norm(std::span<const double> grad) {
  double s = 0.0;
  for (double g : grad) s += g * g;
  return std::sqrt(s);
}

double clip_global_norm(std::span<double> grad, double max_norm) {
  const double norm = global_norm(grad);
  if (std::isfinite(norm) && norm > max_norm && max_norm > 0.0) {
    const double scale = max_norm / norm;
    for (double& g : grad) g *= scale;
  }
  return norm;
}

}  // namespace mpcc::agent
