#include "insitu/blackbox/remote.hpp"

#include <poll.h>
#include <sys/socket.h>

#include <algorithm>
#include <cstdio>
#include <iostream>

#include "insitu/blackbox/protocol.hpp"
#include "insitu/errors.hpp"
#include "socket.hpp"

namespace insitu::blackbox {

namespace {

constexpr const char* kHelloMagic = "04 00 00 00 01";     // HELLO header bytes
constexpr const char* kDescribeMagic = "14 00 00 00 02";  // DESCRIBE header bytes

[[noreturn]] void throw_remote_error(const Frame& frame, const std::string& context) {
  const ErrorPayload e = decode_error(frame.payload);
  const std::string text = context + ": instrument error " + std::to_string(e.code) + ": " + e.message;
  if (e.code == static_cast<std::uint16_t>(ErrorCode::kDimension)) throw DimensionError(text);
  if (e.code == static_cast<std::uint16_t>(ErrorCode::kInternal)) throw InstrumentError(text);
  throw ProtocolError(text);
}

Frame expect(detail::Socket& s, MsgType type, std::chrono::milliseconds timeout,
             const std::string& context) {
  Frame f = detail::recv_frame(s, timeout);
  if (f.type == static_cast<std::uint8_t>(MsgType::kError)) throw_remote_error(f, context);
  if (f.type != static_cast<std::uint8_t>(type)) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "0x%02X", f.type);
    throw ProtocolError(context + ": expected " + to_string(type) + ", got message type " + buf);
  }
  return f;
}

}  // namespace

RemoteEnvironment::RemoteEnvironment(const std::string& address, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  socket_ = std::make_unique<detail::Socket>(detail::connect_to(detail::parse_address(address), timeout));
  try {
    detail::send_frame(*socket_, MsgType::kHello, encode_hello(kProtocolVersion), timeout_);
    Frame f = detail::recv_frame(*socket_, timeout_);
    if (f.type == static_cast<std::uint8_t>(MsgType::kError)) throw_remote_error(f, "handshake");
    if (f.type != static_cast<std::uint8_t>(MsgType::kDescribe) || f.payload.size() != 20) {
      throw ProtocolError(std::string("handshake: expected a DESCRIBE frame (magic ") +
                          kDescribeMagic + ")");
    }
    descriptor_ = decode_describe(f.payload);
  } catch (const ProtocolError& e) {
    socket_->close();
    const std::string what = e.what();
    if (what.find("handshake") == std::string::npos) {
      throw ProtocolError(std::string("handshake: expected a DESCRIBE frame (magic ") +
                          kDescribeMagic + "): " + what);
    }
    throw;
  } catch (...) {
    socket_->close();
    throw;
  }
}

RemoteEnvironment::~RemoteEnvironment() = default;

void RemoteEnvironment::set_input(const PhaseMap* input_phase) {
  std::optional<PhaseMap> wanted;
  if (input_phase != nullptr) wanted = to_wire_precision(*input_phase);
  if (wanted == input_) return;
  const auto payload = wanted ? encode_phase(*wanted) : std::vector<std::uint8_t>{};
  detail::send_frame(*socket_, MsgType::kSetInput, payload, timeout_);
  expect(*socket_, MsgType::kInputOk, timeout_, "SET_INPUT");
  input_ = std::move(wanted);
}

std::vector<IntensityImage> RemoteEnvironment::evaluate_batch(const PhaseMap* input_phase,
                                                              std::span<const PhaseMap> phases) {
  check_shapes(input_phase, phases);
  if (phases.empty()) return {};
  set_input(input_phase);
  std::vector<IntensityImage> images;
  if (phases.size() == 1) {
    detail::send_frame(*socket_, MsgType::kMeasure, encode_phase(phases.front()), timeout_);
    const Frame f = expect(*socket_, MsgType::kImage, timeout_, "MEASURE");
    images.push_back(decode_image(f.payload, descriptor_.sensor));
  } else {
    detail::send_frame(*socket_, MsgType::kBatch, encode_phases(phases), timeout_);
    const Frame f = expect(*socket_, MsgType::kImages, timeout_, "BATCH");
    images = decode_images(f.payload, descriptor_.sensor);
    if (images.size() != phases.size()) {
      throw ProtocolError("BATCH of " + std::to_string(phases.size()) + " returned " +
                          std::to_string(images.size()) + " images");
    }
  }
  count_ += images.size();
  return images;
}

SimServer::SimServer(optics::BenchConfig config, const std::string& listen_address,
                     ServerOptions options)
    : config_(std::move(config)), options_(options) {
  optics::validate(config_);
  const detail::Address addr = detail::parse_address(listen_address);
  host_ = addr.host;
  listener_ = std::make_unique<detail::Socket>(detail::listen_on(addr, &port_));
}

SimServer::~SimServer() { stop(); }

std::string SimServer::address() const { return host_ + ":" + std::to_string(port_); }

void SimServer::start() {
  if (acceptor_.joinable()) return;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void SimServer::serve() { accept_loop(); }

void SimServer::stop() {
  stopping_ = true;
  if (acceptor_.joinable()) acceptor_.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(mutex_);
    for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  if (listener_) listener_->close();
}

void SimServer::accept_loop() {
  std::uint64_t index = 0;
  while (!stopping_) {
    pollfd p{listener_->fd(), POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    const int fd = ::accept(listener_->fd(), nullptr, nullptr);
    if (fd < 0) continue;
    std::lock_guard lock(mutex_);
    open_fds_.push_back(fd);
    workers_.emplace_back([this, fd, i = index++] { handle(detail::Socket(fd), i); });
  }
}

void SimServer::handle(detail::Socket socket, std::uint64_t index) {
  const auto timeout = options_.io_timeout;
  auto reply_error = [&](ErrorCode code, const std::string& message) {
    detail::send_frame(socket, MsgType::kError,
                       encode_error({static_cast<std::uint16_t>(code), message}), timeout);
  };
  try {
    const optics::Bench bench(config_);
    const EnvDescriptor desc = describe(config_);
    Rng rng = make_rng(config_.seed, index);
    std::optional<PhaseMap> input;
    bool greeted = false;
    while (!stopping_) {
      pollfd p{socket.fd(), POLLIN, 0};
      if (::poll(&p, 1, 100) <= 0) continue;
      Frame frame;
      try {
        frame = detail::recv_frame(socket, timeout);
      } catch (const ProtocolError& e) {
        // The stream cannot be resynchronized after a bad length.
        reply_error(ErrorCode::kMalformedFrame,
                    greeted ? e.what()
                            : std::string("expected HELLO frame (magic ") + kHelloMagic + "): " +
                                  e.what());
        break;
      }
      if (!greeted) {
        if (frame.type != static_cast<std::uint8_t>(MsgType::kHello) || frame.payload.size() != 4) {
          reply_error(ErrorCode::kMalformedFrame,
                      std::string("expected HELLO frame (magic ") + kHelloMagic + ")");
          break;
        }
        const std::uint32_t version = decode_hello(frame.payload);
        if (version != options_.protocol_version) {
          reply_error(ErrorCode::kVersionMismatch,
                      "protocol version mismatch: instrument speaks " +
                          std::to_string(options_.protocol_version) + ", client sent " +
                          std::to_string(version));
          break;
        }
        detail::send_frame(socket, MsgType::kDescribe, encode_describe(desc), timeout);
        greeted = true;
        continue;
      }
      try {
        switch (to_msg_type(frame.type)) {
          case MsgType::kSetInput:
            if (frame.payload.empty()) {
              input.reset();
            } else {
              input = decode_phase(frame.payload, desc.grid);
            }
            detail::send_frame(socket, MsgType::kInputOk, {}, timeout);
            break;
          case MsgType::kMeasure: {
            const PhaseMap phase = decode_phase(frame.payload, desc.grid);
            const IntensityImage image =
                to_wire_precision(bench.run(input ? &*input : nullptr, phase, rng));
            ++count_;
            detail::send_frame(socket, MsgType::kImage, encode_image(image), timeout);
            break;
          }
          case MsgType::kBatch: {
            const auto phases = decode_phases(frame.payload, desc.grid);
            std::vector<IntensityImage> images;
            images.reserve(phases.size());
            for (const PhaseMap& phase : phases) {
              images.push_back(to_wire_precision(bench.run(input ? &*input : nullptr, phase, rng)));
              ++count_;
            }
            detail::send_frame(socket, MsgType::kImages, encode_images(images), timeout);
            break;
          }
          default:
            reply_error(ErrorCode::kMalformedFrame,
                        "unexpected " + to_string(to_msg_type(frame.type)) + " from client");
        }
      } catch (const ProtocolError& e) {
        reply_error(is_known_type(frame.type) ? ErrorCode::kMalformedFrame : ErrorCode::kUnknownType,
                    e.what());
      } catch (const DimensionError& e) {
        reply_error(ErrorCode::kDimension, e.what());
      } catch (const InstrumentError&) {
        throw;
      } catch (const Error& e) {
        reply_error(ErrorCode::kInternal, e.what());
      }
    }
  } catch (const InstrumentError&) {
    // Peer went away or stalled; only this connection is affected.
  } catch (const std::exception& e) {
    std::cerr << "serve-sim: connection " << index << ": " << e.what() << '\n';
  }
  std::lock_guard lock(mutex_);
  std::erase(open_fds_, socket.fd());
}

void serve_sim(const optics::BenchConfig& config, const std::string& listen_address) {
  SimServer server(config, listen_address);
  std::cerr << "serve-sim: listening on " << server.address() << '\n';
  server.serve();
  std::abort();  // serve() only returns after stop(), which nothing calls here
}

}  // namespace insitu::blackbox
