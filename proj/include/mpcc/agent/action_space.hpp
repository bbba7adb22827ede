#pragma once

#include <vector>

namespace mpcc::agent {

// Joint cwnd adjustment: each of M subflows moves by k * delta with
// delta in [-n, n]. Index order is row-major with subflow 0 outermost.
class ActionSpace {
 public:
  ActionSpace(int num_subflows, int max_steps, int unit_pkts);

  int size() const { return size_; }
  int num_subflows() const { return m_; }
  int max_steps() const { return n_; }
  int unit_pkts() const { return k_; }

  // Per-subflow delta in steps (not packets).
  std::vector<int> decode(int index) const;
  int encode(const std::vector<int>& deltas) const;
  // Index whose deltas are all zero.
  int hold_index() const;

 private:
  int m_;
  int n_;
  int k_;
  int size_;
};

}  // namespace mpcc::agent
