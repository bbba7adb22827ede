#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mpcc/agent/kernels.hpp"
#include "mpcc/netsim/rng.hpp"

namespace mpcc::agent {

// One named tensor inside a flat parameter vector.
struct ParamSpec {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

// `batch` sequences of `len` rows, each row `dim` wide. Rows with valid == 0
// are padding (front-padded before the start of an episode).
struct ContextBatch {
  int batch = 0;
  int len = 0;
  int dim = 0;
  std::vector<double> x;
  std::vector<std::uint8_t> valid;

  ContextBatch() = default;
  ContextBatch(int b, int l, int d)
      : batch(b), len(l), dim(d), x(static_cast<std::size_t>(b) * l * d, 0.0),
        valid(static_cast<std::size_t>(b) * l, 0) {}
  double* row(int b, int t) { return x.data() + (static_cast<std::size_t>(b) * len + t) * dim; }
  const double* row(int b, int t) const { return x.data() + (static_cast<std::size_t>(b) * len + t) * dim; }
};

// Activations recorded by a forward pass for the matching backward pass.
struct Tape {
  int batch = 0;
  int len = 0;
  std::vector<std::uint8_t> valid;
  std::vector<std::vector<double>> buffers;
};

// Stateless Q-network architecture: parameters live in flat vectors owned
// by the caller, so online and target copies share one instance.
class QNetwork {
 public:
  virtual ~QNetwork() = default;

  virtual std::string kind() const = 0;
  virtual nlohmann::json config() const = 0;
  virtual int input_dim() const = 0;
  virtual int num_actions() const = 0;
  // Longest context the network accepts.
  virtual int context_len() const = 0;

  const std::vector<ParamSpec>& layout() const { return layout_; }
  std::size_t num_params() const { return num_params_; }
  const ParamSpec& param(const std::string& name) const;

  virtual void init(std::span<double> params, netsim::Rng& rng) const = 0;

  // q: (batch*len) x num_actions. Throws std::invalid_argument on shape
  // mismatch, naming the dimensions.
  virtual void forward(std::span<const double> params, const ContextBatch& in, std::vector<double>& q,
                       Tape* tape) const = 0;
  // Accumulates d(loss)/d(params) into grad given dq = d(loss)/dq.
  virtual void backward(std::span<const double> params, const Tape& tape, std::span<const double> dq,
                        std::span<double> grad) const = 0;

  void use_reference_kernels(bool on) { kernels_ = on ? &kernels::reference() : &kernels::parallel(); }
  const kernels::KernelSet& ops() const { return *kernels_; }

 protected:
  std::size_t add_param(const std::string& name, int rows, int cols);
  void check_input(std::span<const double> params, const ContextBatch& in) const;

  std::vector<ParamSpec> layout_;
  std::size_t num_params_ = 0;
  const kernels::KernelSet* kernels_ = &kernels::parallel();
};

struct TransformerConfig {
  int input_dim = 12;
  int num_actions = 25;
  int context_len = 8;
  int d_model = 64;
  int n_blocks = 2;
  int n_heads = 4;
  int d_ff = 128;
};

// Pre-norm causal Transformer with learned positional embeddings and a
// linear Q head applied at every timestep.
class TransformerQNet : public QNetwork {
 public:
  explicit TransformerQNet(TransformerConfig cfg);

  std::string kind() const override { return "transformer"; }
  nlohmann::json config() const override;
  int input_dim() const override { return cfg_.input_dim; }
  int num_actions() const override { return cfg_.num_actions; }
  int context_len() const override { return cfg_.context_len; }
  const TransformerConfig& arch() const { return cfg_; }

  void init(std::span<double> params, netsim::Rng& rng) const override;
  void forward(std::span<const double> params, const ContextBatch& in, std::vector<double>& q,
               Tape* tape) const override;
  void backward(std::span<const double> params, const Tape& tape, std::span<const double> dq,
                std::span<double> grad) const override;

 private:
  struct BlockOffsets {
    std::size_t ln1_g, ln1_b, wq, bq, wk, bk, wv, bv, wo, bo, ln2_g, ln2_b, w1, b1, w2, b2;
  };
  TransformerConfig cfg_;
  std::size_t embed_w_, embed_b_, pos_, lnf_g_, lnf_b_, head_w_, head_b_;
  std::vector<BlockOffsets> blocks_;
};

struct MlpConfig {
  int input_dim = 12;
  int num_actions = 25;
  int hidden = 246;
  int context_len = 1;
};

// Two GELU hidden layers applied to each timestep independently.
class MlpQNet : public QNetwork {
 public:
  explicit MlpQNet(MlpConfig cfg);

  std::string kind() const override { return "mlp"; }
  nlohmann::json config() const override;
  int input_dim() const override { return cfg_.input_dim; }
  int num_actions() const override { return cfg_.num_actions; }
  int context_len() const override { return cfg_.context_len; }
  const MlpConfig& arch() const { return cfg_; }

  void init(std::span<double> params, netsim::Rng& rng) const override;
  void forward(std::span<const double> params, const ContextBatch& in, std::vector<double>& q,
               Tape* tape) const override;
  void backward(std::span<const double> params, const Tape& tape, std::span<const double> dq,
                std::span<double> grad) const override;

 private:
  MlpConfig cfg_;
  std::size_t w1_, b1_, w2_, b2_, w3_, b3_;
};

// Hidden width giving an MLP about `budget` parameters.
int matched_hidden_width(std::size_t budget, int input_dim, int num_actions);

// Builds a network from its config() JSON (a "kind" field selects the class).
std::unique_ptr<QNetwork> make_network(const nlohmann::json& config);

}  // namespace mpcc::agent
