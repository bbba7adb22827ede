#include "mpcc/agent/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpcc::agent {

namespace {

void require(bool ok, const char* field) {
  if (!ok) throw std::invalid_argument(std::string("invalid agent parameter: ") + field);
}

AgentConfig validated(AgentConfig c) {
  c.validate();
  return c;
}

}  // namespace

void AgentConfig::validate() const {
  require(arch == "dtqn" || arch == "ddqn", "arch");
  require(d_model > 0 && n_heads > 0 && d_model % n_heads == 0, "d_model/n_heads");
  require(n_blocks >= 0, "n_blocks");
  require(d_ff > 0, "d_ff");
  require(context_len >= 1, "context_len");
  require(arch != "ddqn" || context_len == 1, "context_len (ddqn uses 1)");
  require(mlp_hidden >= 0, "mlp_hidden");
  require(batch >= 1, "batch");
  require(gamma >= 0.0 && gamma < 1.0, "gamma");
  require(lr > 0.0, "lr");
  require(target_sync >= 1, "target_sync");
  require(replay_capacity >= 1, "replay_capacity");
  require(grad_clip > 0.0, "grad_clip");
  require(eps_start >= 0.0 && eps_start <= 1.0, "eps_start");
  require(eps_end >= 0.0 && eps_end <= 1.0, "eps_end");
  require(eps_decay_steps >= 0, "eps_decay_steps");
  require(train_every >= 1, "train_every");
  require(warmup >= 0, "warmup");
}

nlohmann::json to_json(const AgentConfig& c) {
  return {{"arch", c.arch},
          {"d_model", c.d_model},
          {"n_blocks", c.n_blocks},
          {"n_heads", c.n_heads},
          {"d_ff", c.d_ff},
          {"context_len", c.context_len},
          {"mlp_hidden", c.mlp_hidden},
          {"batch", c.batch},
          {"gamma", c.gamma},
          {"lr", c.lr},
          {"target_sync", c.target_sync},
          {"replay_capacity", c.replay_capacity},
          {"grad_clip", c.grad_clip},
          {"eps_start", c.eps_start},
          {"eps_end", c.eps_end},
          {"eps_decay_steps", c.eps_decay_steps},
          {"train_every", c.train_every},
          {"warmup", c.warmup},
          {"seed", c.seed},
          {"reference_kernels", c.reference_kernels}};
}

AgentConfig agent_config_from_json(const nlohmann::json& j) {
  AgentConfig c;
  if (!j.is_object()) throw std::invalid_argument("agent: expected an object");
  if (j.contains("arch")) {
    c.arch = j.at("arch").get<std::string>();
    if (c.arch == "ddqn") c.context_len = 1;
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "arch") continue;
    else if (key == "d_model") c.d_model = value.get<int>();
    else if (key == "n_blocks") c.n_blocks = value.get<int>();
    else if (key == "n_heads") c.n_heads = value.get<int>();
    else if (key == "d_ff") c.d_ff = value.get<int>();
    else if (key == "context_len") c.context_len = value.get<int>();
    else if (key == "mlp_hidden") c.mlp_hidden = value.get<int>();
    else if (key == "batch") c.batch = value.get<int>();
    else if (key == "gamma") c.gamma = value.get<double>();
    else if (key == "lr") c.lr = value.get<double>();
    else if (key == "target_sync") c.target_sync = value.get<int>();
    else if (key == "replay_capacity") c.replay_capacity = value.get<std::size_t>();
    else if (key == "grad_clip") c.grad_clip = value.get<double>();
    else if (key == "eps_start") c.eps_start = value.get<double>();
    else if (key == "eps_end") c.eps_end = value.get<double>();
    else if (key == "eps_decay_steps") c.eps_decay_steps = value.get<int>();
    else if (key == "train_every") c.train_every = value.get<int>();
    else if (key == "warmup") c.warmup = value.get<int>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else if (key == "reference_kernels") c.reference_kernels = value.get<bool>();
    else throw std::invalid_argument("agent: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

std::unique_ptr<QNetwork> build_network(const AgentConfig& cfg, int input_dim, int num_actions) {
  std::unique_ptr<QNetwork> net;
  if (cfg.arch == "dtqn") {
    TransformerConfig t;
    t.input_dim = input_dim;
    t.num_actions = num_actions;
    t.context_len = cfg.context_len;
    t.d_model = cfg.d_model;
    t.n_blocks = cfg.n_blocks;
    t.n_heads = cfg.n_heads;
    t.d_ff = cfg.d_ff;
    net = std::make_unique<TransformerQNet>(t);
  } else {
    MlpConfig m;
    m.input_dim = input_dim;
    m.num_actions = num_actions;
    m.context_len = 1;
    if (cfg.mlp_hidden > 0) {
      m.hidden = cfg.mlp_hidden;
    } else {
      // Budget of the Transformer this ablation replaces.
      TransformerConfig t;
      t.input_dim = input_dim;
      t.num_actions = num_actions;
      t.context_len = 8;
      t.d_model = cfg.d_model;
      t.n_blocks = cfg.n_blocks;
      t.n_heads = cfg.n_heads;
      t.d_ff = cfg.d_ff;
      m.hidden = matched_hidden_width(TransformerQNet(t).num_params(), input_dim, num_actions);
    }
    net = std::make_unique<MlpQNet>(m);
  }
  net->use_reference_kernels(cfg.reference_kernels);
  return net;
}

int argmax(std::span<const double> q) {
  int best = 0;
  for (std::size_t a = 1; a < q.size(); ++a) {
    if (q[a] > q[static_cast<std::size_t>(best)]) best = static_cast<int>(a);
  }
  return best;
}

int select_action(std::span<const double> q, double eps, netsim::Rng& rng) {
  // Greedy calls leave the stream untouched, so evaluation runs do not shift training.
  if (eps > 0.0 && rng.uniform() < eps) return static_cast<int>(rng.below(q.size()));
  return argmax(q);
}

std::vector<double> compute_targets(const QNetwork& net, std::span<const double> online,
                                    std::span<const double> target, const TrajectoryBatch& batch, double gamma) {
  const int A = net.num_actions();
  std::vector<double> q_online;
  std::vector<double> q_target;
  net.forward(online, batch.next_ctx, q_online, nullptr);
  net.forward(target, batch.next_ctx, q_target, nullptr);
  const std::size_t rows = batch.actions.size();
  std::vector<double> y(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!batch.ctx.valid[r]) continue;
    if (batch.dones[r]) {
      y[r] = batch.rewards[r];
      continue;
    }
    const std::span<const double> row(q_online.data() + r * static_cast<std::size_t>(A), static_cast<std::size_t>(A));
    const int a = argmax(row);
    y[r] = batch.rewards[r] + gamma * q_target[r * static_cast<std::size_t>(A) + static_cast<std::size_t>(a)];
  }
  return y;
}

double td_loss(std::span<const double> q, int num_actions, const std::vector<int>& actions,
               const std::vector<std::uint8_t>& valid, std::span<const double> targets, std::vector<double>* dq) {
  const std::size_t rows = actions.size();
  if (q.size() != rows * static_cast<std::size_t>(num_actions) || valid.size() != rows || targets.size() != rows) {
    throw std::invalid_argument("td_loss: shapes disagree");
  }
  std::size_t count = 0;
  for (auto v : valid) count += v ? 1 : 0;
  if (dq) dq->assign(q.size(), 0.0);
  if (count == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!valid[r]) continue;
    const std::size_t idx = r * static_cast<std::size_t>(num_actions) + static_cast<std::size_t>(actions[r]);
    const double diff = q[idx] - targets[r];
    sum += diff * diff;
    if (dq) (*dq)[idx] = 2.0 * diff / static_cast<double>(count);
  }
  return sum / static_cast<double>(count);
}

DqnAgent::DqnAgent(AgentConfig cfg, int input_dim, int num_actions)
    : cfg_(validated(std::move(cfg))),
      net_(build_network(cfg_, input_dim, num_actions)),
      adam_(net_->num_params(), AdamConfig{cfg_.lr}),
      replay_(cfg_.replay_capacity, input_dim),
      act_rng_(netsim::derive_seed(cfg_.seed, {netsim::streams::kAgent, 1})),
      sample_rng_(netsim::derive_seed(cfg_.seed, {netsim::streams::kAgent, 2})) {
  online_.resize(net_->num_params());
  netsim::Rng init_rng(netsim::derive_seed(cfg_.seed, {netsim::streams::kInit}));
  net_->init(online_, init_rng);
  target_ = online_;
  grad_.resize(online_.size());
}

void DqnAgent::set_online(std::span<const double> params) {
  if (params.size() != online_.size()) throw std::invalid_argument("parameter count mismatch");
  online_.assign(params.begin(), params.end());
  target_ = online_;
}

void DqnAgent::begin_episode(const std::vector<double>& obs0) {
  context_.clear();
  context_.push_back(obs0);
  if (training_) replay_.begin_episode(obs0);
}

ContextBatch DqnAgent::context_batch() const {
  const int L = net_->context_len();
  ContextBatch in(1, L, net_->input_dim());
  const int pad = L - static_cast<int>(context_.size());
  for (int t = 0; t < L; ++t) {
    if (t < pad) continue;
    const auto& o = context_[static_cast<std::size_t>(t - pad)];
    std::copy(o.begin(), o.end(), in.row(0, t));
    in.valid[static_cast<std::size_t>(t)] = 1;
  }
  return in;
}

std::vector<double> DqnAgent::current_q() const {
  if (context_.empty()) throw std::logic_error("no observation in the current episode");
  std::vector<double> q;
  const ContextBatch in = context_batch();
  net_->forward(online_, in, q, nullptr);
  const auto A = static_cast<std::size_t>(net_->num_actions());
  return {q.end() - static_cast<std::ptrdiff_t>(A), q.end()};
}

double DqnAgent::epsilon() const {
  if (cfg_.eps_decay_steps == 0) return cfg_.eps_end;
  const double frac = std::min(1.0, static_cast<double>(env_steps_) / cfg_.eps_decay_steps);
  return cfg_.eps_start + (cfg_.eps_end - cfg_.eps_start) * frac;
}

int DqnAgent::act(double eps) { return select_action(current_q(), eps, act_rng_); }

int DqnAgent::act() { return act(training_ ? epsilon() : 0.0); }

void DqnAgent::observe(int action, double reward, const std::vector<double>& next_obs, bool done) {
  context_.push_back(next_obs);
  while (static_cast<int>(context_.size()) > net_->context_len()) context_.pop_front();
  if (!training_) return;
  replay_.append(action, reward, done, next_obs);
  ++env_steps_;
  if (env_steps_ % cfg_.train_every == 0) train_step();
}

TrainResult DqnAgent::train_step() {
  if (replay_.size() < static_cast<std::size_t>(cfg_.effective_warmup())) {
    ++skipped_;
    return {};
  }
  const TrajectoryBatch batch = replay_.sample(cfg_.batch, net_->context_len(), sample_rng_);
  return train_on(batch);
}

TrainResult DqnAgent::train_on(const TrajectoryBatch& batch) {
  TrainResult res;
  const auto y = compute_targets(*net_, online_, target_, batch, cfg_.gamma);
  Tape tape;
  std::vector<double> q;
  net_->forward(online_, batch.ctx, q, &tape);
  std::vector<double> dq;
  res.loss = td_loss(q, net_->num_actions(), batch.actions, batch.ctx.valid, y, &dq);
  std::fill(grad_.begin(), grad_.end(), 0.0);
  net_->backward(online_, tape, dq, grad_);
  res.grad_norm = clip_global_norm(grad_, cfg_.grad_clip);
  res.performed = true;
  if (!std::isfinite(res.grad_norm) || !std::isfinite(res.loss)) {
    res.rejected = true;
    ++rejected_steps_;
    return res;
  }
  adam_.step(online_, grad_);
  ++train_steps_;
  last_loss_ = res.loss;
  if (train_steps_ % cfg_.target_sync == 0) sync_target();
  return res;
}

}  // namespace mpcc::agent
