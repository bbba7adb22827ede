#pragma once

#include <functional>
#include <vector>

#include "mpcc/netsim/simulator.hpp"
#include "mpcc/telemetry/engine.hpp"

namespace mpcc::testing {

// Answers every observation with fixed targets (or with `policy` when set)
// and records what it saw and when.
class ScriptedEngine : public telemetry::DecisionEngine {
 public:
  using Policy = std::function<std::vector<int>(const telemetry::ConnectionObservation&)>;

  explicit ScriptedEngine(std::vector<int> targets, const netsim::Simulator* sim = nullptr)
      : targets_(std::move(targets)), sim_(sim) {}
  void set_policy(Policy p) { policy_ = std::move(p); }
  void set_clock(const netsim::Simulator* sim) { sim_ = sim; }

  void hello(const telemetry::Hello& h) override {
    hellos.push_back(h);
  }
  telemetry::ControlDirective decide(const telemetry::ConnectionObservation& obs) override {
    seen.push_back(obs);
    if (sim_) called_at.push_back(sim_->now());
    telemetry::ControlDirective d;
    d.step = obs.step;
    d.targets = policy_ ? policy_(obs) : targets_;
    return d;
  }
  void bye() override { ++byes; }

  std::vector<telemetry::Hello> hellos;
  std::vector<telemetry::ConnectionObservation> seen;
  std::vector<netsim::SimTime> called_at;
  int byes = 0;

 private:
  std::vector<int> targets_;
  const netsim::Simulator* sim_;
  Policy policy_;
};

}  // namespace mpcc::testing
