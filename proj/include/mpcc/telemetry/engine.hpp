#pragma once

#include <memory>

#include "mpcc/telemetry/observation.hpp"
#include "mpcc/telemetry/wire.hpp"

namespace mpcc::telemetry {

// Policy side of the control loop. Owns all agent state.
class DecisionEngine {
 public:
  virtual ~DecisionEngine() = default;
  virtual void hello(const Hello& hello) = 0;
  // Returns per-subflow targets; the proxy stamps the timing fields.
  virtual ControlDirective decide(const ConnectionObservation& obs) = 0;
  virtual void bye() = 0;
};

// Duplex path from the proxy to an engine.
class EngineChannel {
 public:
  virtual ~EngineChannel() = default;
  virtual void open(const Hello& hello) = 0;
  virtual ControlDirective exchange(const ConnectionObservation& obs) = 0;
  virtual void close() = 0;
};

// Direct call into an engine living in the same process.
class InprocChannel : public EngineChannel {
 public:
  explicit InprocChannel(DecisionEngine& engine) : engine_(engine) {}
  void open(const Hello& hello) override { engine_.hello(hello); }
  ControlDirective exchange(const ConnectionObservation& obs) override { return engine_.decide(obs); }
  void close() override { engine_.bye(); }

 private:
  DecisionEngine& engine_;
};

}  // namespace mpcc::telemetry
