#pragma once

#include <string>

#include "mpcc/telemetry/engine.hpp"

namespace mpcc::telemetry {

// Framed-JSON transport over a connected stream socket.
class SocketChannel : public EngineChannel {
 public:
  // Takes ownership of a connected descriptor.
  explicit SocketChannel(int fd) : fd_(fd) {}
  // "unix:/path/to/socket" or "host:port".
  static SocketChannel connect_to(const std::string& address);
  SocketChannel(SocketChannel&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  SocketChannel(const SocketChannel&) = delete;
  SocketChannel& operator=(const SocketChannel&) = delete;
  ~SocketChannel() override;

  void open(const Hello& hello) override;
  ControlDirective exchange(const ConnectionObservation& obs) override;
  void close() override;

 private:
  int fd_ = -1;
};

// Blocking frame I/O on a stream descriptor.
void write_message(int fd, const WireMessage& msg);
// Returns false on orderly EOF before any byte of a frame.
bool read_message(int fd, WireMessage& out);

// Serves one proxy session on `fd` until Bye or EOF. Replies to every
// Observation with a Directive and to Bye with Bye.
void serve_session(int fd, DecisionEngine& engine);

// Listens on `address` ("unix:/path" or "host:port") and serves
// `max_sessions` sessions sequentially (0 = forever).
void serve(const std::string& address, DecisionEngine& engine, int max_sessions = 0);

}  // namespace mpcc::telemetry
