#include "socket.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "insitu/errors.hpp"

namespace insitu::blackbox::detail {

namespace {

std::string errno_text() { return std::strerror(errno); }

}  // namespace

Address parse_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos || colon + 1 == text.size()) {
    throw ConfigError("instrument address '" + text + "' is not host:port");
  }
  Address a;
  a.host = text.substr(0, colon);
  if (a.host.empty()) a.host = "127.0.0.1";
  try {
    std::size_t used = 0;
    const unsigned long port = std::stoul(text.substr(colon + 1), &used);
    if (used != text.size() - colon - 1 || port > 65535) throw std::out_of_range("port");
    a.port = static_cast<std::uint16_t>(port);
  } catch (const std::logic_error&) {
    throw ConfigError("instrument address '" + text + "' has an invalid port");
  }
  return a;
}

Socket::~Socket() { close(); }

Socket& Socket::operator=(Socket&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = other.release();
  }
  return *this;
}

int Socket::release() {
  const int fd = fd_;
  fd_ = -1;
  return fd;
}

void Socket::close() {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

void Socket::shutdown() {
  if (fd_ >= 0) ::shutdown(fd_, SHUT_RDWR);
}

void Socket::wait(short events, std::chrono::milliseconds timeout, const char* what) {
  pollfd p{fd_, events, 0};
  for (;;) {
    const int rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
    if (rc > 0) return;
    if (rc == 0) {
      throw InstrumentError(std::string("instrument timed out while ") + what + " after " +
                            std::to_string(timeout.count()) + " ms");
    }
    if (errno != EINTR) throw InstrumentError("poll failed: " + errno_text());
  }
}

void Socket::send_all(std::span<const std::uint8_t> bytes, std::chrono::milliseconds timeout) {
  std::size_t sent = 0;
  while (sent < bytes.size()) {
    wait(POLLOUT, timeout, "sending");
    const ssize_t n = ::send(fd_, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw InstrumentError("send failed: " + errno_text());
    }
    sent += static_cast<std::size_t>(n);
  }
}

void Socket::recv_exact(std::span<std::uint8_t> bytes, std::chrono::milliseconds timeout) {
  std::size_t got = 0;
  while (got < bytes.size()) {
    wait(POLLIN, timeout, "receiving");
    const ssize_t n = ::recv(fd_, bytes.data() + got, bytes.size() - got, 0);
    if (n == 0) throw InstrumentError("instrument connection closed by peer");
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      throw InstrumentError("recv failed: " + errno_text());
    }
    got += static_cast<std::size_t>(n);
  }
}

Socket connect_to(const Address& address, std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(address.port);
  if (const int rc = ::getaddrinfo(address.host.c_str(), port.c_str(), &hints, &res); rc != 0) {
    throw InstrumentError("cannot resolve " + address.host + ": " + ::gai_strerror(rc));
  }
  std::string last_error = "no addresses";
  for (addrinfo* ai = res; ai != nullptr; ai = ai->ai_next) {
    Socket s(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
    if (!s.valid()) continue;
    const int flags = ::fcntl(s.fd(), F_GETFL, 0);
    ::fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(s.fd(), ai->ai_addr, ai->ai_addrlen);
    if (rc != 0 && errno == EINPROGRESS) {
      pollfd p{s.fd(), POLLOUT, 0};
      rc = ::poll(&p, 1, static_cast<int>(timeout.count()));
      int err = 0;
      socklen_t len = sizeof err;
      if (rc == 1 && ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len) == 0 && err == 0) {
        rc = 0;
      } else {
        last_error = rc == 0 ? "timed out" : std::strerror(err != 0 ? err : errno);
        rc = -1;
      }
    } else if (rc != 0) {
      last_error = errno_text();
    }
    if (rc == 0) {
      int one = 1;
      ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      ::freeaddrinfo(res);
      return s;
    }
  }
  ::freeaddrinfo(res);
  throw InstrumentError("cannot connect to instrument at " + address.host + ":" + port + ": " +
                        last_error);
}

Socket listen_on(const Address& address, std::uint16_t* port) {
  Socket s(::socket(AF_INET, SOCK_STREAM, 0));
  if (!s.valid()) throw InstrumentError("socket failed: " + errno_text());
  int one = 1;
  ::setsockopt(s.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in sa{};
  sa.sin_family = AF_INET;
  sa.sin_port = htons(address.port);
  if (address.host == "0.0.0.0" || address.host == "*") {
    sa.sin_addr.s_addr = htonl(INADDR_ANY);
  } else if (address.host == "localhost") {
    sa.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  } else if (::inet_pton(AF_INET, address.host.c_str(), &sa.sin_addr) != 1) {
    throw ConfigError("listen address must be an IPv4 literal, got " + address.host);
  }
  if (::bind(s.fd(), reinterpret_cast<sockaddr*>(&sa), sizeof sa) != 0) {
    throw InstrumentError("cannot bind " + address.host + ":" + std::to_string(address.port) +
                          ": " + errno_text());
  }
  if (::listen(s.fd(), 16) != 0) throw InstrumentError("listen failed: " + errno_text());
  socklen_t len = sizeof sa;
  ::getsockname(s.fd(), reinterpret_cast<sockaddr*>(&sa), &len);
  if (port != nullptr) *port = ntohs(sa.sin_port);
  return s;
}

void send_frame(Socket& socket, MsgType type, std::span<const std::uint8_t> payload,
                std::chrono::milliseconds timeout) {
  socket.send_all(encode_frame(type, payload), timeout);
}

Frame recv_frame(Socket& socket, std::chrono::milliseconds timeout) {
  std::array<std::uint8_t, kFrameHeaderBytes> header{};
  socket.recv_exact(header, timeout);
  Frame frame;
  const std::uint32_t length = parse_header(header, &frame.type);
  frame.payload.resize(length);
  socket.recv_exact(frame.payload, timeout);
  return frame;
}

}  // namespace insitu::blackbox::detail
