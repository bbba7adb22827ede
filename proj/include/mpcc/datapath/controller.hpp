#pragma once

#include <cstdint>

#include "mpcc/netsim/sim_time.hpp"

namespace mpcc::datapath {

class Connection;

enum class LossSignal { kDupAcks, kTimeout };

// Classical congestion control plugged into a connection. Called from the
// event loop only. Implementations adjust Connection::subflow(i).cwnd_pkts
// through Connection::set_cwnd so bounds are enforced in one place.
class CongestionController {
 public:
  virtual ~CongestionController() = default;
  virtual const char* name() const = 0;
  virtual void attach(Connection& conn) = 0;
  // `acked_pkts` newly cumulatively acknowledged packets on subflow i, Open mode only.
  virtual void on_ack(Connection& conn, int i, int acked_pkts, netsim::SimTime now) = 0;
  virtual void on_loss(Connection& conn, int i, LossSignal signal, netsim::SimTime now) = 0;
};

}  // namespace mpcc::datapath
