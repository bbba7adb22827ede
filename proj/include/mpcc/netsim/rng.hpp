#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mpcc::netsim {

// Seeded generator used by every stochastic component. The engine is
// mt19937_64 everywhere; conversions to doubles are done here so draw
// sequences do not depend on library distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Always consumes exactly one draw.
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

// Derives an independent stream seed from a root seed and a path of
// component identifiers, e.g. derive_seed(root, {kLinkStream, link_index}).
std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path);

namespace streams {
inline constexpr std::uint64_t kLink = 0x4c494e4b;
inline constexpr std::uint64_t kAgent = 0x4147454e;
inline constexpr std::uint64_t kWorkload = 0x574b4c44;
inline constexpr std::uint64_t kSweep = 0x53574550;
inline constexpr std::uint64_t kInit = 0x494e4954;
}  // namespace streams

}  // namespace mpcc::netsim
