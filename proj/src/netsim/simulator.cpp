#include "mpcc/netsim/simulator.hpp"

#include <cstdio>
#include <cstdlib>

namespace mpcc::netsim {

void Simulator::schedule(SimTime at, Action action) {
  if (at < now_) {
    std::fprintf(stderr, "Simulator::schedule: event at %lld us is before now (%lld us)\n",
                 static_cast<long long>(at.us()), static_cast<long long>(now_.us()));
    std::abort();
  }
  queue_.push(Entry{at, next_order_++, std::move(action)});
}

bool Simulator::step() {
  if (queue_.empty()) return false;
  // priority_queue::top is const; move the action out before popping.
  Entry entry = std::move(const_cast<Entry&>(queue_.top()));
  queue_.pop();
  now_ = entry.at;
  entry.action();
  ++processed_;
  if (hook_) hook_();
  return true;
}

void Simulator::run_until(SimTime end) {
  while (!queue_.empty() && queue_.top().at <= end) step();
  if (now_ < end) now_ = end;
}

void Simulator::run(std::uint64_t max_events) {
  std::uint64_t fired = 0;
  while (fired < max_events && step()) ++fired;
}

}  // namespace mpcc::netsim
