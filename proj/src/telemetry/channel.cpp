#include "mpcc/telemetry/engine.hpp"
#include "mpcc/telemetry/observation.hpp"

namespace mpcc::telemetry {

std::vector<double> ConnectionObservation::flatten() const {
  std::vector<double> out;
  out.reserve(subflows.size() * kNumFeatures);
  for (const auto& s : subflows) out.insert(out.end(), s.obs.features.begin(), s.obs.features.end());
  return out;
}

}  // namespace mpcc::telemetry
