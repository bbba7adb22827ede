#pragma once

#include <compare>
#include <cstdint>

namespace mpcc::netsim {

// Absolute simulation time in integer microseconds since the start of a run.
class SimTime {
 public:
  constexpr SimTime() = default;
  constexpr explicit SimTime(std::int64_t us) : us_(us) {}

  static constexpr SimTime zero() { return SimTime{0}; }
  static constexpr SimTime from_ms(std::int64_t ms) { return SimTime{ms * 1000}; }
  static constexpr SimTime from_s(double s) {
    return SimTime{static_cast<std::int64_t>(s * 1e6 + (s >= 0 ? 0.5 : -0.5))};
  }

  constexpr std::int64_t us() const { return us_; }
  constexpr double seconds() const { return static_cast<double>(us_) * 1e-6; }

  constexpr SimTime operator+(std::int64_t delta_us) const { return SimTime{us_ + delta_us}; }
  constexpr SimTime operator-(std::int64_t delta_us) const { return SimTime{us_ - delta_us}; }
  constexpr std::int64_t operator-(SimTime other) const { return us_ - other.us_; }
  constexpr SimTime& operator+=(std::int64_t delta_us) {
    us_ += delta_us;
    return *this;
  }

  constexpr auto operator<=>(const SimTime&) const = default;

 private:
  std::int64_t us_ = 0;
};

constexpr SimTime max(SimTime a, SimTime b) { return a < b ? b : a; }

}  // namespace mpcc::netsim
