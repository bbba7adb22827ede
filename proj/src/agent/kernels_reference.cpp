#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "mpcc/agent/kernels.hpp"

namespace mpcc::agent::kernels {

namespace {

constexpr double kLnEps = 1e-5;

void linear_forward(const double* x, const double* w, const double* b, double* y, int n, int in, int out) {
  for (int r = 0; r < n; ++r) {
    for (int j = 0; j < out; ++j) {
      double acc = b ? b[j] : 0.0;
      for (int k = 0; k < in; ++k) acc += x[r * in + k] * w[k * out + j];
      y[r * out + j] = acc;
    }
  }
}

void linear_backward_input(const double* dy, const double* w, double* dx, int n, int in, int out) {
  for (int r = 0; r < n; ++r) {
    for (int k = 0; k < in; ++k) {
      double acc = 0.0;
      for (int j = 0; j < out; ++j) acc += dy[r * out + j] * w[k * out + j];
      dx[r * in + k] = acc;
    }
  }
}

void linear_backward_params(const double* x, const double* dy, double* dw, double* db, int n, int in, int out) {
  for (int k = 0; k < in; ++k) {
    for (int j = 0; j < out; ++j) {
      double acc = 0.0;
      for (int r = 0; r < n; ++r) acc += x[r * in + k] * dy[r * out + j];
      dw[k * out + j] += acc;
    }
  }
  if (db) {
    for (int j = 0; j < out; ++j) {
      double acc = 0.0;
      for (int r = 0; r < n; ++r) acc += dy[r * out + j];
      db[j] += acc;
    }
  }
}

void layernorm_forward(const double* x, const double* gamma, const double* beta, double* y, double* mean,
                       double* rstd, int n, int d) {
  for (int r = 0; r < n; ++r) {
    const double* xr = x + r * d;
    double m = 0.0;
    for (int j = 0; j < d; ++j) m += xr[j];
    m /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (xr[j] - m) * (xr[j] - m);
    var /= d;
    const double s = 1.0 / std::sqrt(var + kLnEps);
    for (int j = 0; j < d; ++j) y[r * d + j] = (xr[j] - m) * s * gamma[j] + beta[j];
    mean[r] = m;
    rstd[r] = s;
  }
}

void layernorm_backward(const double* dy, const double* x, const double* gamma, const double* mean,
                        const double* rstd, double* dx, double* dgamma, double* dbeta, int n, int d) {
  for (int r = 0; r < n; ++r) {
    const double* xr = x + r * d;
    const double* g = dy + r * d;
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (int j = 0; j < d; ++j) {
      const double xhat = (xr[j] - mean[r]) * rstd[r];
      const double gj = g[j] * gamma[j];
      sum_g += gj;
      sum_gx += gj * xhat;
    }
    for (int j = 0; j < d; ++j) {
      const double xhat = (xr[j] - mean[r]) * rstd[r];
      dx[r * d + j] = rstd[r] * (g[j] * gamma[j] - sum_g / d - xhat * sum_gx / d);
    }
  }
  for (int j = 0; j < d; ++j) {
    double ag = 0.0;
    double ab = 0.0;
    for (int r = 0; r < n; ++r) {
      const double xhat = (x[r * d + j] - mean[r]) * rstd[r];
      ag += dy[r * d + j] * xhat;
      ab += dy[r * d + j];
    }
    dgamma[j] += ag;
    dbeta[j] += ab;
  }
}

void gelu_forward(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = gelu(x[i]);
}

void gelu_backward(const double* x, const double* dy, double* dx, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) dx[i] = dy[i] * gelu_grad(x[i]);
}

void attention_forward(const double* q, const double* k, const double* v, const std::uint8_t* valid, double* probs,
                       double* out, int batch, int len, int d, int heads) {
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < heads; ++h) {
      for (int t = 0; t < len; ++t) {
        double* p = probs + ((static_cast<std::size_t>(b) * heads + h) * len + t) * len;
        const double* qt = q + (b * len + t) * d + h * dh;
        double mx = -INFINITY;
        for (int s = 0; s < len; ++s) {
          if (s > t || !valid[b * len + s]) {
            p[s] = -INFINITY;
            continue;
          }
          const double* ks = k + (b * len + s) * d + h * dh;
          double acc = 0.0;
          for (int c = 0; c < dh; ++c) acc += qt[c] * ks[c];
          p[s] = acc * scale;
          mx = std::max(mx, p[s]);
        }
        double* ot = out + (b * len + t) * d + h * dh;
        if (mx == -INFINITY) {
          for (int s = 0; s < len; ++s) p[s] = 0.0;
          for (int c = 0; c < dh; ++c) ot[c] = 0.0;
          continue;
        }
        double z = 0.0;
        for (int s = 0; s < len; ++s) {
          p[s] = p[s] == -INFINITY ? 0.0 : std::exp(p[s] - mx);
          z += p[s];
        }
        for (int s = 0; s < len; ++s) p[s] /= z;
        for (int c = 0; c < dh; ++c) {
          double acc = 0.0;
          for (int s = 0; s <= t; ++s) acc += p[s] * v[(b * len + s) * d + h * dh + c];
          ot[c] = acc;
        }
      }
    }
  }
}

void attention_backward(const double* dout, const double* q, const double* k, const double* v, const double* probs,
                        double* dq, double* dk, double* dv, int batch, int len, int d, int heads) {
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t total = static_cast<std::size_t>(batch) * len * d;
  std::fill(dq, dq + total, 0.0);
  std::fill(dk, dk + total, 0.0);
  std::fill(dv, dv + total, 0.0);
  std::vector<double> dp(static_cast<std::size_t>(len));
  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < heads; ++h) {
      for (int t = 0; t < len; ++t) {
        const double* p = probs + ((static_cast<std::size_t>(b) * heads + h) * len + t) * len;
        const double* go = dout + (b * len + t) * d + h * dh;
        double dot = 0.0;
        for (int s = 0; s <= t; ++s) {
          const double* vs = v + (b * len + s) * d + h * dh;
          double acc = 0.0;
          for (int c = 0; c < dh; ++c) acc += go[c] * vs[c];
          dp[s] = acc;
          dot += p[s] * acc;
        }
        const double* qt = q + (b * len + t) * d + h * dh;
        double* gq = dq + (b * len + t) * d + h * dh;
        for (int s = 0; s <= t; ++s) {
          if (p[s] == 0.0) continue;
          const double ds = p[s] * (dp[s] - dot) * scale;
          const double* ks = k + (b * len + s) * d + h * dh;
          double* gk = dk + (b * len + s) * d + h * dh;
          double* gv = dv + (b * len + s) * d + h * dh;
          for (int c = 0; c < dh; ++c) {
            gq[c] += ds * ks[c];
            gk[c] += ds * qt[c];
            gv[c] += p[s] * go[c];
          }
        }
      }
    }
  }
}

}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
  const double pdf = std::exp(-0.5 * x * x) * (M_2_SQRTPI * M_SQRT1_2 * 0.5);
  return cdf + x * pdf;
}

const KernelSet& reference() {
  static const KernelSet set{linear_forward,    linear_backward_input, linear_backward_params, layernorm_forward,
                             layernorm_backward, gelu_forward,          gelu_backward,          attention_forward,
                             attention_backward};
  return set;
}

}  // namespace mpcc::agent::kernels
