#pragma once

#include <cstdint>
#include <deque>
#include <vector>

#include "mpcc/agent/qnetwork.hpp"
#include "mpcc/netsim/rng.hpp"

namespace mpcc::agent {

// B trajectories of L steps. Row (b, t) of `ctx` holds observation o_s for
// step s; the same row of `next_ctx` holds o_{s+1}. Rows before the start
// of an episode are padding (valid == 0).
struct TrajectoryBatch {
  ContextBatch ctx;
  ContextBatch next_ctx;
  std::vector<int> actions;
  std::vector<double> rewards;
  std::vector<std::uint8_t> dones;
};

// Episode store holding at most `capacity` transitions; the oldest
// transitions are evicted first.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim);

  void begin_episode(const std::vector<double>& obs0);
  void append(int action, double reward, bool done, const std::vector<double>& next_obs);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t num_episodes() const { return episodes_.size(); }
  int obs_dim() const { return obs_dim_; }

  // Each trajectory ends at a transition drawn uniformly from the buffer.
  TrajectoryBatch sample(int batch, int len, netsim::Rng& rng) const;
  // Trajectory ending at transition `index` (0 = oldest stored).
  void fill(TrajectoryBatch& out, int slot, std::size_t index, int len) const;

 private:
  struct Episode {
    std::deque<std::vector<double>> obs;  // transitions + 1 entries
    std::deque<int> actions;
    std::deque<double> rewards;
    std::deque<std::uint8_t> dones;
    std::size_t transitions() const { return actions.size(); }
  };

  void evict();

  std::size_t capacity_;
  int obs_dim_;
  std::deque<Episode> episodes_;
  std::size_t size_ = 0;
};

}  // namespace mpcc::agent
