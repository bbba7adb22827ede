#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mpcc/agent/qnetwork.hpp"

namespace mpcc::agent {

namespace {

enum Slot : int { kIn = 0, kZ1, kA1, kZ2, kA2, kSlots };

}  // namespace

MlpQNet::MlpQNet(MlpConfig cfg) : cfg_(cfg) {
  if (cfg_.input_dim < 1 || cfg_.num_actions < 1 || cfg_.hidden < 1 || cfg_.context_len < 1) {
    throw std::invalid_argument("mlp dimensions must be positive");
  }
  w1_ = add_param("fc1.w", cfg_.input_dim, cfg_.hidden);
  b1_ = add_param("fc1.b", 1, cfg_.hidden);
  w2_ = add_param("fc2.w", cfg_.hidden, cfg_.hidden);
  b2_ = add_param("fc2.b", 1, cfg_.hidden);
  w3_ = add_param("head.w", cfg_.hidden, cfg_.num_actions);
  b3_ = add_param("head.b", 1, cfg_.num_actions);
}

nlohmann::json MlpQNet::config() const {
  return {{"kind", "mlp"},
          {"input_dim", cfg_.input_dim},
          {"num_actions", cfg_.num_actions},
          {"hidden", cfg_.hidden},
          {"context_len", cfg_.context_len}};
}

void MlpQNet::init(std::span<double> params, netsim::Rng& rng) const {
  for (const auto& p : layout_) {
    auto w = params.subspan(p.offset, p.size());
    if (p.rows == 1) {
      std::fill(w.begin(), w.end(), 0.0);
      continue;
    }
    const double a = std::sqrt(6.0 / (p.rows + p.cols));
    for (double& x : w) x = rng.uniform(-a, a);
  }
}

void MlpQNet::forward(std::span<const double> params, const ContextBatch& in, std::vector<double>& q,
                      Tape* tape) const {
  check_input(params, in);
  Tape local;
  Tape& tp = tape ? *tape : local;
  const auto& K = ops();
  const int N = in.batch * in.len;
  const int h = cfg_.hidden;
  const double* P = params.data();
  const auto nh = static_cast<std::size_t>(N) * h;
  tp.batch = in.batch;
  tp.len = in.len;
  tp.valid = in.valid;
  tp.buffers.resize(kSlots);
  tp.buffers[kIn] = in.x;
  for (int s : {kZ1, kA1, kZ2, kA2}) tp.buffers[s].resize(nh);
  K.linear_forward(in.x.data(), P + w1_, P + b1_, tp.buffers[kZ1].data(), N, cfg_.input_dim, h);
  K.gelu_forward(tp.buffers[kZ1].data(), tp.buffers[kA1].data(), nh);
  K.linear_forward(tp.buffers[kA1].data(), P + w2_, P + b2_, tp.buffers[kZ2].data(), N, h, h);
  K.gelu_forward(tp.buffers[kZ2].data(), tp.buffers[kA2].data(), nh);
  q.resize(static_cast<std::size_t>(N) * cfg_.num_actions);
  K.linear_forward(tp.buffers[kA2].data(), P + w3_, P + b3_, q.data(), N, h, cfg_.num_actions);
}

void MlpQNet::backward(std::span<const double> params, const Tape& tp, std::span<const double> dq,
                       std::span<double> grad) const {
  const auto& K = ops();
  const int N = tp.batch * tp.len;
  const int h = cfg_.hidden;
  const int A = cfg_.num_actions;
  const double* P = params.data();
  double* G = grad.data();
  const auto nh = static_cast<std::size_t>(N) * h;
  if (dq.size() != static_cast<std::size_t>(N) * A) throw std::invalid_argument("dq has wrong size");
  if (grad.size() != num_params_) throw std::invalid_argument("gradient vector has wrong size");
  std::vector<double> da(nh);
  std::vector<double> dz(nh);
  K.linear_backward_params(tp.buffers[kA2].data(), dq.data(), G + w3_, G + b3_, N, h, A);
  K.linear_backward_input(dq.data(), P + w3_, da.data(), N, h, A);
  K.gelu_backward(tp.buffers[kZ2].data(), da.data(), dz.data(), nh);
  K.linear_backward_params(tp.buffers[kA1].data(), dz.data(), G + w2_, G + b2_, N, h, h);
  K.linear_backward_input(dz.data(), P + w2_, da.data(), N, h, h);
  K.gelu_backward(tp.buffers[kZ1].data(), da.data(), dz.data(), nh);
  K.linear_backward_params(tp.buffers[kIn].data(), dz.data(), G + w1_, G + b1_, N, cfg_.input_dim, h);
}

}  // namespace mpcc::agent
