#pragma once

#include <cstddef>
#include <cstdint>

// Dense kernels for the Q-networks. All matrices are row-major doubles.
// `reference` is the plain serial implementation kept as the test oracle;
// `parallel` distributes independent output rows/columns over OpenMP
// threads and keeps every per-element summation in the reference order,
// so both produce the same values up to floating-point contraction.
namespace mpcc::agent::kernels {

struct KernelSet {
  // Y[n x out] = X[n x in] W[in x out] + b
  void (*linear_forward)(const double* x, const double* w, const double* b, double* y, int n, int in, int out);
  // dX[n x in] = dY[n x out] W^T
  void (*linear_backward_input)(const double* dy, const double* w, double* dx, int n, int in, int out);
  // dW += X^T dY, db += column sums of dY
  void (*linear_backward_params)(const double* x, const double* dy, double* dw, double* db, int n, int in, int out);

  void (*layernorm_forward)(const double* x, const double* gamma, const double* beta, double* y, double* mean,
                            double* rstd, int n, int d);
  // dX = LN'(x) dY; dgamma, dbeta accumulate.
  void (*layernorm_backward)(const double* dy, const double* x, const double* gamma, const double* mean,
                             const double* rstd, double* dx, double* dgamma, double* dbeta, int n, int d);

  void (*gelu_forward)(const double* x, double* y, std::size_t n);
  void (*gelu_backward)(const double* x, const double* dy, double* dx, std::size_t n);

  // Multi-head causal attention over `batch` sequences of length `len`.
  // q, k, v, out: (batch*len) x d, head h owns columns [h*d/heads, (h+1)*d/heads).
  // Key s is visible to query t iff s <= t and valid[b*len+s] != 0. Queries
  // with no visible key produce zero output. probs: batch x heads x len x len.
  void (*attention_forward)(const double* q, const double* k, const double* v, const std::uint8_t* valid,
                            double* probs, double* out, int batch, int len, int d, int heads);
  // dq, dk, dv are overwritten.
  void (*attention_backward)(const double* dout, const double* q, const double* k, const double* v,
                             const double* probs, double* dq, double* dk, double* dv, int batch, int len, int d,
                             int heads);
};

const KernelSet& reference();
const KernelSet& parallel();

double gelu(double x);
double gelu_grad(double x);

}  // namespace mpcc::agent::kernels
