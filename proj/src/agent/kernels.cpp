#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "mpcc/agent/kernels.hpp"

namespace mpcc::agent::kernels {

namespace {

constexpr double kLnEps = 1e-5;

void linear_forward(const double* x, const double* w, const double* b, double* y, int n, int in, int out) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) {
    double* yr = y + static_cast<std::size_t>(r) * out;
    for (int j = 0; j < out; ++j) yr[j] = b ? b[j] : 0.0;
    const double* xr = x + static_cast<std::size_t>(r) * in;
    for (int k = 0; k < in; ++k) {
      const double xv = xr[k];
      const double* wk = w + static_cast<std::size_t>(k) * out;
#pragma omp simd
      for (int j = 0; j < out; ++j) yr[j] += xv * wk[j];
    }
  }
}

void linear_backward_input(const double* dy, const double* w, double* dx, int n, int in, int out) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) {
    const double* g = dy + static_cast<std::size_t>(r) * out;
    for (int k = 0; k < in; ++k) {
      const double* wk = w + static_cast<std::size_t>(k) * out;
      double acc = 0.0;
      for (int j = 0; j < out; ++j) acc += g[j] * wk[j];
      dx[static_cast<std::size_t>(r) * in + k] = acc;
    }
  }
}

void linear_backward_params(const double* x, const double* dy, double* dw, double* db, int n, int in, int out) {
#pragma omp parallel
  {
    std::vector<double> acc(static_cast<std::size_t>(out));
#pragma omp for schedule(static)
    for (int k = 0; k < in; ++k) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int r = 0; r < n; ++r) {
        const double xv = x[static_cast<std::size_t>(r) * in + k];
        const double* g = dy + static_cast<std::size_t>(r) * out;
#pragma omp simd
        for (int j = 0; j < out; ++j) acc[j] += xv * g[j];
      }
      double* dwk = dw + static_cast<std::size_t>(k) * out;
      for (int j = 0; j < out; ++j) dwk[j] += acc[j];
    }
  }
  if (db) {
    std::vector<double> acc(static_cast<std::size_t>(out), 0.0);
    for (int r = 0; r < n; ++r) {
      const double* g = dy + static_cast<std::size_t>(r) * out;
      for (int j = 0; j < out; ++j) acc[j] += g[j];
    }
    for (int j = 0; j < out; ++j) db[j] += acc[j];
  }
}

void layernorm_forward(const double* x, const double* gamma, const double* beta, double* y, double* mean,
                       double* rstd, int n, int d) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) {
    const double* xr = x + static_cast<std::size_t>(r) * d;
    double m = 0.0;
    for (int j = 0; j < d; ++j) m += xr[j];
    m /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (xr[j] - m) * (xr[j] - m);
    var /= d;
    const double s = 1.0 / std::sqrt(var + kLnEps);
    double* yr = y + static_cast<std::size_t>(r) * d;
    for (int j = 0; j < d; ++j) yr[j] = (xr[j] - m) * s * gamma[j] + beta[j];
    mean[r] = m;
    rstd[r] = s;
  }
}

void layernorm_backward(const double* dy, const double* x, const double* gamma, const double* mean,
                        const double* rstd, double* dx, double* dgamma, double* dbeta, int n, int d) {
#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) {
    const double* xr = x + static_cast<std::size_t>(r) * d;
    const double* g = dy + static_cast<std::size_t>(r) * d;
    double sum_g = 0.0;
    double sum_gx = 0.0;
    for (int j = 0; j < d; ++j) {
      const double xhat = (xr[j] - mean[r]) * rstd[r];
      const double gj = g[j] * gamma[j];
      sum_g += gj;
      sum_gx += gj * xhat;
    }
    double* dxr = dx + static_cast<std::size_t>(r) * d;
    for (int j = 0; j < d; ++j) {
      const double xhat = (xr[j] - mean[r]) * rstd[r];
      dxr[j] = rstd[r] * (g[j] * gamma[j] - sum_g / d - xhat * sum_gx / d);
    }
  }
  std::vector<double> ag(static_cast<std::size_t>(d), 0.0);
  std::vector<double> ab(static_cast<std::size_t>(d), 0.0);
  for (int r = 0; r < n; ++r) {
    for (int j = 0; j < d; ++j) {
      const double xhat = (x[static_cast<std::size_t>(r) * d + j] - mean[r]) * rstd[r];
      ag[j] += dy[static_cast<std::size_t>(r) * d + j] * xhat;
      ab[j] += dy[static_cast<std::size_t>(r) * d + j];
    }
  }
  for (int j = 0; j < d; ++j) {
    dgamma[j] += ag[j];
    dbeta[j] += ab[j];
  }
}

void gelu_forward(const double* x, double* y, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) y[i] = gelu(x[i]);
}

void gelu_backward(const double* x, const double* dy, double* dx, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) dx[i] = dy[i] * gelu_grad(x[i]);
}

void attention_forward(const double* q, const double* k, const double* v, const std::uint8_t* valid, double* probs,
                       double* out, int batch, int len, int d, int heads) {
  const int dh = d / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
#pragma omp parallel for collapse(2) schedule(static)
  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < heads; ++h) {
      for (int t = 0; t < len; ++t) {
        double* p = probs + ((static_cast<std::size_t>(b) * heads + h) * len + t) * len;
        const double* qt = q + static_cast<std::size_t>(b * len + t) * d + h * dh;
        double mx = -INFINITY;
        for (int s = 0; s < len; ++s) {
          if (s > t || !valid[b * len + s]) {
            p[s] = -INFINITY;
            continue;
          }
          const double* ks = k + static_cast<std::size_t>(b * len + s) * d + h * dh;
          double acc = 0.0;
          for (int c = 0; c < dh; ++c) acc += qt[c] * ks[c];
          p[s] = acc * scale;
          mx = std::max(mx, p[s]);
        }
        double* ot = out + static_cast<std::size_t>(b * len + t) * d + h * dh;
        if (mx == -INFINITY) {
          std::fill(p, p + len, 0.0);
          std::fill(ot, ot + dh, 0.0);
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
          for (int s = 0; s <= t; ++s) acc += p[s] * v[static_cast<std::size_t>(b * len + s) * d + h * dh + c];
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
#pragma omp parallel
  {
    std::vector<double> dp(static_cast<std::size_t>(len));
#pragma omp for collapse(2) schedule(static)
    for (int b = 0; b < batch; ++b) {
      for (int h = 0; h < heads; ++h) {
        for (int t = 0; t < len; ++t) {
          const std::size_t row = static_cast<std::size_t>(b * len + t) * d + h * dh;
          std::fill(dq + row, dq + row + dh, 0.0);
          std::fill(dk + row, dk + row + dh, 0.0);
          std::fill(dv + row, dv + row + dh, 0.0);
        }
        for (int t = 0; t < len; ++t) {
          const double* p = probs + ((static_cast<std::size_t>(b) * heads + h) * len + t) * len;
          const double* go = dout + static_cast<std::size_t>(b * len + t) * d + h * dh;
          double dot = 0.0;
          for (int s = 0; s <= t; ++s) {
            const double* vs = v + static_cast<std::size_t>(b * len + s) * d + h * dh;
            double acc = 0.0;
            for (int c = 0; c < dh; ++c) acc += go[c] * vs[c];
            dp[s] = acc;
            dot += p[s] * acc;
          }
          const double* qt = q + static_cast<std::size_t>(b * len + t) * d + h * dh;
          double* gq = dq + static_cast<std::size_t>(b * len + t) * d + h * dh;
          for (int s = 0; s <= t; ++s) {
            if (p[s] == 0.0) continue;
            const double ds = p[s] * (dp[s] - dot) * scale;
            const double* ks = k + static_cast<std::size_t>(b * len + s) * d + h * dh;
            double* gk = dk + static_cast<std::size_t>(b * len + s) * d + h * dh;
            double* gv = dv + static_cast<std::size_t>(b * len + s) * d + h * dh;
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
}

}  // namespace

const KernelSet& parallel() {
  static const KernelSet set{linear_forward,    linear_backward_input, linear_backward_params, layernorm_forward,
                             layernorm_backward, gelu_forward,          gelu_backward,          attention_forward,
                             attention_backward};
  return set;
}

}  // namespace mpcc::agent::kernels
