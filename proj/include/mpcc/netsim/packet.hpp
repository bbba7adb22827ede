#pragma once

#include <cstdint>

#include "mpcc/netsim/sim_time.hpp"

namespace mpcc::netsim {

inline constexpr std::int32_t kMtuBytes = 1500;

struct Packet {
  int conn_id = 0;
  int subflow_id = 0;
  std::int64_t seq = 0;  // subflow sequence number, one per packet
  std::int32_t size_bytes = kMtuBytes;
  SimTime sent_at;
  bool is_ack = false;
  std::int64_t acked_seq = 0;  // cumulative: next expected subflow seq
  std::int64_t delivered_bytes_at_send = 0;
  SimTime delivered_time_at_send;
  bool retransmission = false;

  // ACK-only echo of the data packet that triggered it.
  std::int64_t echo_seq = 0;
  SimTime echo_sent_at;
  std::int32_t echo_size_bytes = 0;
  bool echo_new_data = false;
};

}  // namespace mpcc::netsim
