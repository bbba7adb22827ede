#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

#include "mpcc/netsim/sim_time.hpp"

namespace mpcc::netsim {

// Single-threaded discrete-event loop. Events with equal timestamps fire in
// insertion order.
class Simulator {
 public:
  using Action = std::function<void()>;

  SimTime now() const { return now_; }

  // Aborts the process if `at` lies in the past.
  void schedule(SimTime at, Action action);
  void schedule_in(std::int64_t delay_us, Action action) { schedule(now_ + delay_us, std::move(action)); }

  // Fires the next event. Returns false when the queue is empty.
  bool step();
  // Fires every event with time <= end, then advances the clock to `end`.
  void run_until(SimTime end);
  // Runs until the queue drains or `max_events` fired.
  void run(std::uint64_t max_events = UINT64_MAX);

  bool empty() const { return queue_.empty(); }
  // Time of the next pending event; meaningless when empty().
  SimTime next_time() const { return queue_.top().at; }
  std::size_t pending() const { return queue_.size(); }
  std::uint64_t events_processed() const { return processed_; }

  // Called after every fired event; used by invariant checkers.
  void set_post_event_hook(std::function<void()> hook) { hook_ = std::move(hook); }

 private:
  struct Entry {
    SimTime at;
    std::uint64_t order;
    Action action;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.order > b.order;
    }
  };

  SimTime now_;
  std::uint64_t next_order_ = 0;
  std::uint64_t processed_ = 0;
  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
  std::function<void()> hook_;
};

}  // namespace mpcc::netsim
