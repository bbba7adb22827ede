#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mpcc/agent/qnetwork.hpp"

namespace mpcc::agent {

namespace {

// Tape buffer slots: 0 = input copy, then kPerBlock slots per block, then
// the final norm.
enum BlockSlot : int {
  kXin = 0,
  kLn1Mean,
  kLn1Rstd,
  kH1,
  kQ,
  kK,
  kV,
  kProbs,
  kAttn,
  kX1,
  kLn2Mean,
  kLn2Rstd,
  kH2,
  kF1,
  kG,
  kPerBlock
};
enum FinalSlot : int { kXf = 0, kLnfMean, kLnfRstd, kHf, kFinalSlots };

void glorot(std::span<double> w, int fan_in, int fan_out, netsim::Rng& rng) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& x : w) x = rng.uniform(-a, a);
}

}  // namespace

TransformerQNet::TransformerQNet(TransformerConfig cfg) : cfg_(cfg) {
  if (cfg_.input_dim < 1 || cfg_.num_actions < 1 || cfg_.context_len < 1 || cfg_.d_model < 1 || cfg_.n_blocks < 0 ||
      cfg_.n_heads < 1 || cfg_.d_ff < 1) {
    throw std::invalid_argument("transformer dimensions must be positive");
  }
  if (cfg_.d_model % cfg_.n_heads != 0) {
    throw std::invalid_argument("d_model " + std::to_string(cfg_.d_model) + " not divisible by n_heads " +
                                std::to_string(cfg_.n_heads));
  }
  const int d = cfg_.d_model;
  embed_w_ = add_param("embed.w", cfg_.input_dim, d);
  embed_b_ = add_param("embed.b", 1, d);
  pos_ = add_param("pos", cfg_.context_len, d);
  for (int k = 0; k < cfg_.n_blocks; ++k) {
    const std::string p = "blocks." + std::to_string(k) + ".";
    BlockOffsets o{};
    o.ln1_g = add_param(p + "ln1.gamma", 1, d);
    o.ln1_b = add_param(p + "ln1.beta", 1, d);
    o.wq = add_param(p + "attn.wq", d, d);
    o.bq = add_param(p + "attn.bq", 1, d);
    o.wk = add_param(p + "attn.wk", d, d);
    o.bk = add_param(p + "attn.bk", 1, d);
    o.wv = add_param(p + "attn.wv", d, d);
    o.bv = add_param(p + "attn.bv", 1, d);
    o.wo = add_param(p + "attn.wo", d, d);
    o.bo = add_param(p + "attn.bo", 1, d);
    o.ln2_g = add_param(p + "ln2.gamma", 1, d);
    o.ln2_b = add_param(p + "ln2.beta", 1, d);
    o.w1 = add_param(p + "ff.w1", d, cfg_.d_ff);
    o.b1 = add_param(p + "ff.b1", 1, cfg_.d_ff);
    o.w2 = add_param(p + "ff.w2", cfg_.d_ff, d);
    o.b2 = add_param(p + "ff.b2", 1, d);
    blocks_.push_back(o);
  }
  lnf_g_ = add_param("ln_f.gamma", 1, d);
  lnf_b_ = add_param("ln_f.beta", 1, d);
  head_w_ = add_param("head.w", d, cfg_.num_actions);
  head_b_ = add_param("head.b", 1, cfg_.num_actions);
}

nlohmann::json TransformerQNet::config() const {
  return {{"kind", "transformer"},     {"input_dim", cfg_.input_dim}, {"num_actions", cfg_.num_actions},
          {"context_len", cfg_.context_len}, {"d_model", cfg_.d_model},   {"n_blocks", cfg_.n_blocks},
          {"n_heads", cfg_.n_heads},   {"d_ff", cfg_.d_ff}};
}

void TransformerQNet::init(std::span<double> params, netsim::Rng& rng) const {
  for (const auto& p : layout_) {
    auto w = params.subspan(p.offset, p.size());
    const auto ends_with = [&](const char* s) {
      const std::string suf(s);
      return p.name.size() >= suf.size() && p.name.compare(p.name.size() - suf.size(), suf.size(), suf) == 0;
    };
    if (ends_with("gamma")) {
      std::fill(w.begin(), w.end(), 1.0);
    } else if (p.name == "pos") {
      for (double& x : w) x = 0.02 * rng.normal();
    } else if (p.rows == 1) {
      std::fill(w.begin(), w.end(), 0.0);
    } else {
      glorot(w, p.rows, p.cols, rng);
    }
  }
}

void TransformerQNet::forward(std::span<const double> params, const ContextBatch& in, std::vector<double>& q,
                              Tape* tape) const {
  check_input(params, in);
  Tape local;
  Tape& tp = tape ? *tape : local;
  const auto& K = ops();
  const int B = in.batch;
  const int L = in.len;
  const int N = B * L;
  const int d = cfg_.d_model;
  const int ff = cfg_.d_ff;
  const int H = cfg_.n_heads;
  const double* P = params.data();
  const auto nd = static_cast<std::size_t>(N) * d;
  const auto nff = static_cast<std::size_t>(N) * ff;

  tp.batch = B;
  tp.len = L;
  tp.valid = in.valid;
  tp.buffers.resize(1 + static_cast<std::size_t>(cfg_.n_blocks) * kPerBlock + kFinalSlots);
  tp.buffers[0] = in.x;

  // Embedding plus position.
  std::vector<double> x(nd);
  K.linear_forward(in.x.data(), P + embed_w_, P + embed_b_, x.data(), N, cfg_.input_dim, d);
  for (int b = 0; b < B; ++b) {
    for (int t = 0; t < L; ++t) {
      double* xr = x.data() + static_cast<std::size_t>(b * L + t) * d;
      const double* pr = P + pos_ + static_cast<std::size_t>(t) * d;
      for (int c = 0; c < d; ++c) xr[c] += pr[c];
    }
  }

  std::vector<double> tmp(nd);
  for (int k = 0; k < cfg_.n_blocks; ++k) {
    const auto& o = blocks_[static_cast<std::size_t>(k)];
    auto* buf = &tp.buffers[1 + static_cast<std::size_t>(k) * kPerBlock];
    buf[kXin] = x;
    buf[kLn1Mean].resize(static_cast<std::size_t>(N));
    buf[kLn1Rstd].resize(static_cast<std::size_t>(N));
    buf[kH1].resize(nd);
    K.layernorm_forward(x.data(), P + o.ln1_g, P + o.ln1_b, buf[kH1].data(), buf[kLn1Mean].data(),
                        buf[kLn1Rstd].data(), N, d);
    for (int s : {kQ, kK, kV, kAttn}) buf[s].resize(nd);
    K.linear_forward(buf[kH1].data(), P + o.wq, P + o.bq, buf[kQ].data(), N, d, d);
    K.linear_forward(buf[kH1].data(), P + o.wk, P + o.bk, buf[kK].data(), N, d, d);
    K.linear_forward(buf[kH1].data(), P + o.wv, P + o.bv, buf[kV].data(), N, d, d);
    buf[kProbs].resize(static_cast<std::size_t>(B) * H * L * L);
    K.attention_forward(buf[kQ].data(), buf[kK].data(), buf[kV].data(), in.valid.data(), buf[kProbs].data(),
                        buf[kAttn].data(), B, L, d, H);
    K.linear_forward(buf[kAttn].data(), P + o.wo, P + o.bo, tmp.data(), N, d, d);
    for (std::size_t i = 0; i < nd; ++i) x[i] += tmp[i];
    buf[kX1] = x;

    buf[kLn2Mean].resize(static_cast<std::size_t>(N));
    buf[kLn2Rstd].resize(static_cast<std::size_t>(N));
    buf[kH2].resize(nd);
    K.layernorm_forward(x.data(), P + o.ln2_g, P + o.ln2_b, buf[kH2].data(), buf[kLn2Mean].data(),
                        buf[kLn2Rstd].data(), N, d);
    buf[kF1].resize(nff);
    buf[kG].resize(nff);
    K.linear_forward(buf[kH2].data(), P + o.w1, P + o.b1, buf[kF1].data(), N, d, ff);
    K.gelu_forward(buf[kF1].data(), buf[kG].data(), nff);
    K.linear_forward(buf[kG].data(), P + o.w2, P + o.b2, tmp.data(), N, ff, d);
    for (std::size_t i = 0; i < nd; ++i) x[i] += tmp[i];
  }

  auto* fin = &tp.buffers[1 + static_cast<std::size_t>(cfg_.n_blocks) * kPerBlock];
  fin[kXf] = x;
  fin[kLnfMean].resize(static_cast<std::size_t>(N));
  fin[kLnfRstd].resize(static_cast<std::size_t>(N));
  fin[kHf].resize(nd);
  K.layernorm_forward(x.data(), P + lnf_g_, P + lnf_b_, fin[kHf].data(), fin[kLnfMean].data(), fin[kLnfRstd].data(),
                      N, d);
  q.resize(static_cast<std::size_t>(N) * cfg_.num_actions);
  K.linear_forward(fin[kHf].data(), P + head_w_, P + head_b_, q.data(), N, d, cfg_.num_actions);
}

void TransformerQNet::backward(std::span<const double> params, const Tape& tp, std::span<const double> dq,
                               std::span<double> grad) const {
  const auto& K = ops();
  const int B = tp.batch;
  const int L = tp.len;
  const int N = B * L;
  const int d = cfg_.d_model;
  const int ff = cfg_.d_ff;
  const int H = cfg_.n_heads;
  const int A = cfg_.num_actions;
  const double* P = params.data();
  double* G = grad.data();
  const auto nd = static_cast<std::size_t>(N) * d;
  const auto nff = static_cast<std::size_t>(N) * ff;
  if (dq.size() != static_cast<std::size_t>(N) * A) throw std::invalid_argument("dq has wrong size");
  if (grad.size() != num_params_) throw std::invalid_argument("gradient vector has wrong size");

  const auto* fin = &tp.buffers[1 + static_cast<std::size_t>(cfg_.n_blocks) * kPerBlock];
  std::vector<double> dh(nd);
  std::vector<double> dx(nd);
  K.linear_backward_params(fin[kHf].data(), dq.data(), G + head_w_, G + head_b_, N, d, A);
  K.linear_backward_input(dq.data(), P + head_w_, dh.data(), N, d, A);
  K.layernorm_backward(dh.data(), fin[kXf].data(), P + lnf_g_, fin[kLnfMean].data(), fin[kLnfRstd].data(),
                       dx.data(), G + lnf_g_, G + lnf_b_, N, d);

  std::vector<double> dg(nff);
  std::vector<double> df1(nff);
  std::vector<double> tmp(nd);
  std::vector<double> dqb(nd);
  std::vector<double> dkb(nd);
  std::vector<double> dvb(nd);
  for (int k = cfg_.n_blocks - 1; k >= 0; --k) {
    const auto& o = blocks_[static_cast<std::size_t>(k)];
    const auto* buf = &tp.buffers[1 + static_cast<std::size_t>(k) * kPerBlock];

    // Feed-forward branch; dx is the gradient w.r.t. the block output.
    K.linear_backward_params(buf[kG].data(), dx.data(), G + o.w2, G + o.b2, N, ff, d);
    K.linear_backward_input(dx.data(), P + o.w2, dg.data(), N, ff, d);
    K.gelu_backward(buf[kF1].data(), dg.data(), df1.data(), nff);
    K.linear_backward_params(buf[kH2].data(), df1.data(), G + o.w1, G + o.b1, N, d, ff);
    K.linear_backward_input(df1.data(), P + o.w1, dh.data(), N, d, ff);
    K.layernorm_backward(dh.data(), buf[kX1].data(), P + o.ln2_g, buf[kLn2Mean].data(), buf[kLn2Rstd].data(),
                         tmp.data(), G + o.ln2_g, G + o.ln2_b, N, d);
    for (std::size_t i = 0; i < nd; ++i) dx[i] += tmp[i];

    // Attention branch.
    K.linear_backward_params(buf[kAttn].data(), dx.data(), G + o.wo, G + o.bo, N, d, d);
    K.linear_backward_input(dx.data(), P + o.wo, tmp.data(), N, d, d);
    K.attention_backward(tmp.data(), buf[kQ].data(), buf[kK].data(), buf[kV].data(), buf[kProbs].data(), dqb.data(),
                         dkb.data(), dvb.data(), B, L, d, H);
    K.linear_backward_params(buf[kH1].data(), dqb.data(), G + o.wq, G + o.bq, N, d, d);
    K.linear_backward_params(buf[kH1].data(), dkb.data(), G + o.wk, G + o.bk, N, d, d);
    K.linear_backward_params(buf[kH1].data(), dvb.data(), G + o.wv, G + o.bv, N, d, d);
    K.linear_backward_input(dqb.data(), P + o.wq, dh.data(), N, d, d);
    K.linear_backward_input(dkb.data(), P + o.wk, tmp.data(), N, d, d);
    for (std::size_t i = 0; i < nd; ++i) dh[i] += tmp[i];
    K.linear_backward_input(dvb.data(), P + o.wv, tmp.data(), N, d, d);
    for (std::size_t i = 0; i < nd; ++i) dh[i] += tmp[i];
    K.layernorm_backward(dh.data(), buf[kXin].data(), P + o.ln1_g, buf[kLn1Mean].data(), buf[kLn1Rstd].data(),
                         tmp.data(), G + o.ln1_g, G + o.ln1_b, N, d);
    for (std::size_t i = 0; i < nd; ++i) dx[i] += tmp[i];
  }

  for (int b = 0; b < B; ++b) {
    for (int t = 0; t < L; ++t) {
      const double* g = dx.data() + static_cast<std::size_t>(b * L + t) * d;
      double* gp = G + pos_ + static_cast<std::size_t>(t) * d;
      for (int c = 0; c < d; ++c) gp[c] += g[c];
    }
  }
  K.linear_backward_params(tp.buffers[0].data(), dx.data(), G + embed_w_, G + embed_b_, N, cfg_.input_dim, d);
}

}  // namespace mpcc::agent
