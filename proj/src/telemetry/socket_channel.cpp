#include "mpcc/telemetry/socket_channel.hpp"

#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <stdexcept>
#include <system_error>
#include <vector>

namespace mpcc::telemetry {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::system_error(errno, std::generic_category(), what);
}

struct Address {
  bool is_unix = false;
  std::string path;
  std::string host;
  std::string port;
};

Address parse_address(const std::string& address) {
  Address a;
  if (address.rfind("unix:", 0) == 0) {
    a.is_unix = true;
    a.path = address.substr(5);
    if (a.path.empty() || a.path.size() >= sizeof(sockaddr_un::sun_path)) {
      throw std::invalid_argument("bad unix socket path in '" + address + "'");
    }
    return a;
  }
  const auto colon = address.rfind(':');
  if (colon == std::string::npos || colon + 1 == address.size()) {
    throw std::invalid_argument("engine address must be unix:PATH or HOST:PORT, got '" + address + "'");
  }
  a.host = address.substr(0, colon);
  a.port = address.substr(colon + 1);
  if (a.host.empty()) a.host = "127.0.0.1";
  return a;
}

sockaddr_un unix_addr(const std::string& path) {
  sockaddr_un sa{};
  sa.sun_family = AF_UNIX;
  std::strncpy(sa.sun_path, path.c_str(), sizeof(sa.sun_path) - 1);
  return sa;
}

addrinfo* resolve(const Address& a, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  if (int rc = getaddrinfo(a.host.c_str(), a.port.c_str(), &hints, &res); rc != 0) {
    throw std::runtime_error("cannot resolve " + a.host + ":" + a.port + ": " + gai_strerror(rc));
  }
  return res;
}

void write_all(int fd, const std::uint8_t* data, std::size_t n) {
  while (n > 0) {
    const ssize_t w = ::send(fd, data, n, MSG_NOSIGNAL);
    if (w < 0) {
      if (errno == EINTR) continue;
      throw_errno("socket write");
    }
    data += w;
    n -= static_cast<std::size_t>(w);
  }
}

// Returns bytes read; short only at EOF.
std::size_t read_full(int fd, std::uint8_t* data, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const ssize_t r = ::recv(fd, data + got, n - got, 0);
    if (r < 0) {
      if (errno == EINTR) continue;
      throw_errno("socket read");
    }
    if (r == 0) break;
    got += static_cast<std::size_t>(r);
  }
  return got;
}

}  // namespace

void write_message(int fd, const WireMessage& msg) {
  const auto frame = encode(msg);
  write_all(fd, frame.data(), frame.size());
}

bool read_message(int fd, WireMessage& out) {
  std::vector<std::uint8_t> buf(4);
  const std::size_t got = read_full(fd, buf.data(), 4);
  if (got == 0) return false;
  if (got < 4) throw WireError("truncated length prefix", got);
  const auto size = complete_frame_size(buf);  // validates the announced length
  (void)size;
  const std::size_t n = (std::size_t{buf[0]} << 24) | (std::size_t{buf[1]} << 16) | (std::size_t{buf[2]} << 8) |
                        std::size_t{buf[3]};
  buf.resize(4 + n);
  const std::size_t body = read_full(fd, buf.data() + 4, n);
  if (body < n) throw WireError("truncated body", 4 + body);
  out = decode(buf);
  return true;
}

SocketChannel SocketChannel::connect_to(const std::string& address) {
  const Address a = parse_address(address);
  if (a.is_unix) {
    const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (fd < 0) throw_errno("socket");
    const auto sa = unix_addr(a.path);
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) != 0) {
      const int err = errno;
      ::close(fd);
      throw std::system_error(err, std::generic_category(), "connect " + address);
    }
    return SocketChannel(fd);
  }
  addrinfo* res = resolve(a, false);
  int fd = -1;
  int err = 0;
  for (addrinfo* p = res; p; p = p->ai_next) {
    fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) break;
    err = errno;
    ::close(fd);
    fd = -1;
  }
  freeaddrinfo(res);
  if (fd < 0) throw std::system_error(err, std::generic_category(), "connect " + address);
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return SocketChannel(fd);
}

SocketChannel::~SocketChannel() {
  if (fd_ >= 0) ::close(fd_);
}

void SocketChannel::open(const Hello& hello) { write_message(fd_, hello); }

ControlDirective SocketChannel::exchange(const ConnectionObservation& obs) {
  write_message(fd_, obs);
  WireMessage reply;
  if (!read_message(fd_, reply)) throw std::runtime_error("engine closed the connection");
  if (auto* d = std::get_if<ControlDirective>(&reply)) return *d;
  throw std::runtime_error(std::string("expected Directive from engine, got ") + message_type(reply));
}

void SocketChannel::close() {
  if (fd_ < 0) return;
  write_message(fd_, Bye{});
  WireMessage reply;
  read_message(fd_, reply);
  ::close(fd_);
  fd_ = -1;
}

void serve_session(int fd, DecisionEngine& engine) {
  WireMessage msg;
  while (read_message(fd, msg)) {
    if (auto* h = std::get_if<Hello>(&msg)) {
      engine.hello(*h);
    } else if (auto* o = std::get_if<ConnectionObservation>(&msg)) {
      write_message(fd, engine.decide(*o));
    } else if (std::holds_alternative<Bye>(msg)) {
      engine.bye();
      write_message(fd, Bye{});
      return;
    } else {
      throw std::runtime_error("unexpected Directive from proxy");
    }
  }
}

void serve(const std::string& address, DecisionEngine& engine, int max_sessions) {
  const Address a = parse_address(address);
  int lfd = -1;
  if (a.is_unix) {
    lfd = ::socket(AF_UNIX, SOCK_STREAM, 0);
    if (lfd < 0) throw_errno("socket");
    ::unlink(a.path.c_str());
    const auto sa = unix_addr(a.path);
    if (::bind(lfd, reinterpret_cast<const sockaddr*>(&sa), sizeof(sa)) != 0) throw_errno("bind " + address);
  } else {
    addrinfo* res = resolve(a, true);
    lfd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (lfd < 0) {
      freeaddrinfo(res);
      throw_errno("socket");
    }
    int one = 1;
    ::setsockopt(lfd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    const int rc = ::bind(lfd, res->ai_addr, res->ai_addrlen);
    freeaddrinfo(res);
    if (rc != 0) throw_errno("bind " + address);
  }
  if (::listen(lfd, 4) != 0) throw_errno("listen");
  for (int served = 0; max_sessions == 0 || served < max_sessions; ++served) {
    const int fd = ::accept(lfd, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      throw_errno("accept");
    }
    try {
      serve_session(fd, engine);
    } catch (...) {
      ::close(fd);
      ::close(lfd);
      throw;
    }
    ::close(fd);
  }
  ::close(lfd);
  if (a.is_unix) ::unlink(a.path.c_str());
}

}  // namespace mpcc::telemetry
