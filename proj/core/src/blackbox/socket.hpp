#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "insitu/blackbox/protocol.hpp"

namespace insitu::blackbox::detail {

struct Address {
  std::string host;
  std::uint16_t port = 0;
};

/// "host:port"; the host may be a name or IPv4 literal.
Address parse_address(const std::string& text);

// Owning POSIX stream socket. Reads and writes wait at most `timeout` for
// progress and throw InstrumentError on timeout or a closed peer.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  [[nodiscard]] int fd() const { return fd_; }
  [[nodiscard]] bool valid() const { return fd_ >= 0; }
  int release();
  void close();
  void shutdown();

  void send_all(std::span<const std::uint8_t> bytes, std::chrono::milliseconds timeout);
  void recv_exact(std::span<std::uint8_t> bytes, std::chrono::milliseconds timeout);

 private:
  void wait(short events, std::chrono::milliseconds timeout, const char* what);
  int fd_ = -1;
};

Socket connect_to(const Address& address, std::chrono::milliseconds timeout);

/// Bound, listening socket; *port receives the actual port (for port 0).
Socket listen_on(const Address& address, std::uint16_t* port);

void send_frame(Socket& socket, MsgType type, std::span<const std::uint8_t> payload,
                std::chrono::milliseconds timeout);
/// Reads one frame. The type byte is returned raw so callers can answer
/// unknown types; oversized frames throw ProtocolError.
Frame recv_frame(Socket& socket, std::chrono::milliseconds timeout);

}  // namespace insitu::blackbox::detail
