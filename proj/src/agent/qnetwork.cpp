#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mpcc/agent/qnetwork.hpp"

namespace mpcc::agent {

const ParamSpec& QNetwork::param(const std::string& name) const {
  for (const auto& p : layout_) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("no parameter named " + name);
}

std::size_t QNetwork::add_param(const std::string& name, int rows, int cols) {
  ParamSpec p{name, rows, cols, num_params_};
  num_params_ += p.size();
  layout_.push_back(p);
  return p.offset;
}

void QNetwork::check_input(std::span<const double> params, const ContextBatch& in) const {
  if (params.size() != num_params_) {
    throw std::invalid_argument("parameter vector has " + std::to_string(params.size()) + " entries, network needs " +
                                std::to_string(num_params_));
  }
  if (in.dim != input_dim()) {
    throw std::invalid_argument("context rows are " + std::to_string(in.dim) + " wide, network expects " +
                                std::to_string(input_dim()));
  }
  if (in.len < 1 || in.len > context_len()) {
    throw std::invalid_argument("context length " + std::to_string(in.len) + " outside [1, " +
                                std::to_string(context_len()) + "]");
  }
  const std::size_t rows = static_cast<std::size_t>(in.batch) * static_cast<std::size_t>(in.len);
  if (in.x.size() != rows * static_cast<std::size_t>(in.dim) || in.valid.size() != rows) {
    throw std::invalid_argument("context buffers do not match " + std::to_string(in.batch) + " x " +
                                std::to_string(in.len) + " x " + std::to_string(in.dim));
  }
}

int matched_hidden_width(std::size_t budget, int input_dim, int num_actions) {
  // h^2 + (in + 3 + A) h + A = budget
  const double b = input_dim + 3.0 + num_actions;
  const double c = static_cast<double>(num_actions) - static_cast<double>(budget);
  const double h = (-b + std::sqrt(b * b - 4.0 * c)) / 2.0;
  return std::max(1, static_cast<int>(std::lround(h)));
}

std::unique_ptr<QNetwork> make_network(const nlohmann::json& config) {
  const auto kind = config.at("kind").get<std::string>();
  if (kind == "transformer") {
    TransformerConfig c;
    c.input_dim = config.at("input_dim").get<int>();
    c.num_actions = config.at("num_actions").get<int>();
    c.context_len = config.at("context_len").get<int>();
    c.d_model = config.at("d_model").get<int>();
    c.n_blocks = config.at("n_blocks").get<int>();
    c.n_heads = config.at("n_heads").get<int>();
    c.d_ff = config.at("d_ff").get<int>();
    return std::make_unique<TransformerQNet>(c);
  }
  if (kind == "mlp") {
    MlpConfig c;
    c.input_dim = config.at("input_dim").get<int>();
    c.num_actions = config.at("num_actions").get<int>();
    c.hidden = config.at("hidden").get<int>();
    c.context_len = config.value("context_len", 1);
    return std::make_unique<MlpQNet>(c);
  }
  throw std::invalid_argument("unknown network kind '" + kind + "'");
}

}  // namespace mpcc::agent
