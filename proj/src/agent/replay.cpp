#include "mpcc/agent/replay.hpp"

#include <algorithm>
#include <stdexcept>

namespace mpcc::agent {

ReplayBuffer::ReplayBuffer(std::size_t capacity, int obs_dim) : capacity_(capacity), obs_dim_(obs_dim) {
  if (capacity_ == 0) throw std::invalid_argument("replay capacity must be > 0");
  if (obs_dim_ < 1) throw std::invalid_argument("observation width must be > 0");
}

void ReplayBuffer::begin_episode(const std::vector<double>& obs0) {
  if (static_cast<int>(obs0.size()) != obs_dim_) throw std::invalid_argument("observation has wrong width");
  // Drop a previous episode that never recorded a transition.
  if (!episodes_.empty() && episodes_.back().transitions() == 0) episodes_.pop_back();
  episodes_.emplace_back();
  episodes_.back().obs.push_back(obs0);
}

void ReplayBuffer::append(int action, double reward, bool done, const std::vector<double>& next_obs) {
  if (episodes_.empty()) throw std::logic_error("append before begin_episode");
  if (static_cast<int>(next_obs.size()) != obs_dim_) throw std::invalid_argument("observation has wrong width");
  auto& e = episodes_.back();
  e.actions.push_back(action);
  e.rewards.push_back(reward);
  e.dones.push_back(done ? 1 : 0);
  e.obs.push_back(next_obs);
  ++size_;
  evict();
}

void ReplayBuffer::evict() {
  while (size_ > capacity_) {
    auto& e = episodes_.front();
    e.obs.pop_front();
    e.actions.pop_front();
    e.rewards.pop_front();
    e.dones.pop_front();
    --size_;
    if (e.transitions() == 0 && episodes_.size() > 1) episodes_.pop_front();
  }
}

void ReplayBuffer::fill(TrajectoryBatch& out, int slot, std::size_t index, int len) const {
  std::size_t ep = 0;
  while (index >= episodes_[ep].transitions()) {
    index -= episodes_[ep].transitions();
    ++ep;
  }
  const auto& e = episodes_[ep];
  const auto end = static_cast<long>(index);
  const long first = std::max(0L, end - len + 1);
  const long pad = len - (end - first + 1);
  for (int t = 0; t < len; ++t) {
    const std::size_t row = static_cast<std::size_t>(slot) * len + t;
    double* x = out.ctx.row(slot, t);
    double* nx = out.next_ctx.row(slot, t);
    if (t < pad) {
      std::fill(x, x + obs_dim_, 0.0);
      std::fill(nx, nx + obs_dim_, 0.0);
      out.ctx.valid[row] = 0;
      out.next_ctx.valid[row] = 0;
      out.actions[row] = 0;
      out.rewards[row] = 0.0;
      out.dones[row] = 0;
      continue;
    }
    const auto s = static_cast<std::size_t>(first + (t - pad));
    std::copy(e.obs[s].begin(), e.obs[s].end(), x);
    std::copy(e.obs[s + 1].begin(), e.obs[s + 1].end(), nx);
    out.ctx.valid[row] = 1;
    out.next_ctx.valid[row] = 1;
    out.actions[row] = e.actions[s];
    out.rewards[row] = e.rewards[s];
    out.dones[row] = e.dones[s];
  }
}

TrajectoryBatch ReplayBuffer::sample(int batch, int len, netsim::Rng& rng) const {
  if (size_ == 0) throw std::logic_error("sampling from an empty replay buffer");
  TrajectoryBatch out;
  out.ctx = ContextBatch(batch, len, obs_dim_);
  out.next_ctx = ContextBatch(batch, len, obs_dim_);
  const auto rows = static_cast<std::size_t>(batch) * len;
  out.actions.assign(rows, 0);
  out.rewards.assign(rows, 0.0);
  out.dones.assign(rows, 0);
  for (int b = 0; b < batch; ++b) fill(out, b, rng.below(size_), len);
  return out;
}

}  // namespace mpcc::agent
