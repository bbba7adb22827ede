#include "mpcc/agent/action_space.hpp"

#include <stdexcept>
#include <string>

namespace mpcc::agent {

ActionSpace::ActionSpace(int num_subflows, int max_steps, int unit_pkts) : m_(num_subflows), n_(max_steps), k_(unit_pkts) {
  if (m_ < 1 || n_ < 0 || k_ < 1) throw std::invalid_argument("action space needs M >= 1, n >= 0, k >= 1");
  size_ = 1;
  for (int i = 0; i < m_; ++i) size_ *= 2 * n_ + 1;
}

std::vector<int> ActionSpace::decode(int index) const {
  if (index < 0 || index >= size_) {
    throw std::out_of_range("action index " + std::to_string(index) + " outside [0, " + std::to_string(size_) + ")");
  }
  const int base = 2 * n_ + 1;
  std::vector<int> out(static_cast<std::size_t>(m_));
  for (int i = m_ - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = index % base - n_;
    index /= base;
  }
  return out;
}

int ActionSpace::encode(const std::vector<int>& deltas) const {
  if (static_cast<int>(deltas.size()) != m_) throw std::invalid_argument("wrong number of subflow deltas");
  const int base = 2 * n_ + 1;
  int index = 0;
  for (int d : deltas) {
    if (d < -n_ || d > n_) throw std::out_of_range("delta " + std::to_string(d) + " outside [-n, n]");
    index = index * base + (d + n_);
  }
  return index;
}

int ActionSpace::hold_index() const { return encode(std::vector<int>(static_cast<std::size_t>(m_), 0)); }

}  // namespace mpcc::agent
