#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "insitu/blackbox/environment.hpp"

namespace insitu::blackbox {

namespace detail {
class Socket;
}

inline constexpr std::chrono::milliseconds kDefaultTimeout{30000};
inline constexpr const char* kInstrumentAddrEnv = "INSITU_INSTRUMENT_ADDR";

/// Client side of the framed protocol. Connects and handshakes on
/// construction; requests are strictly sequential.
class RemoteEnvironment final : public Environment {
 public:
  explicit RemoteEnvironment(const std::string& address,
                             std::chrono::milliseconds timeout = kDefaultTimeout);
  ~RemoteEnvironment() override;
  RemoteEnvironment(const RemoteEnvironment&) = delete;
  RemoteEnvironment& operator=(const RemoteEnvironment&) = delete;

  [[nodiscard]] EnvDescriptor descriptor() const override { return descriptor_; }
  std::vector<IntensityImage> evaluate_batch(const PhaseMap* input_phase,
                                             std::span<const PhaseMap> phases) override;
  using Environment::evaluate_batch;
  [[nodiscard]] std::uint64_t measurement_count() const override { return count_; }

 private:
  void set_input(const PhaseMap* input_phase);

  std::unique_ptr<detail::Socket> socket_;
  std::chrono::milliseconds timeout_;
  EnvDescriptor descriptor_;
  std::optional<PhaseMap> input_;  // what the instrument currently shows as input
  std::uint64_t count_ = 0;
};

struct ServerOptions {
  // Advertised protocol version; only tests change it.
  std::uint32_t protocol_version = kProtocolVersion;
  std::chrono::milliseconds io_timeout = kDefaultTimeout;
};

/// Serves a simulated bench over the framed protocol. Connection k (in accept
/// order, from 0) draws noise from the stream (config.seed, k), matching
/// LocalEnvironment(config, k).
class SimServer {
 public:
  SimServer(optics::BenchConfig config, const std::string& listen_address,
            ServerOptions options = {});
  ~SimServer();
  SimServer(const SimServer&) = delete;
  SimServer& operator=(const SimServer&) = delete;

  /// Accepts connections on a background thread.
  void start();
  /// Accepts connections on the calling thread until stop().
  void serve();
  void stop();

  [[nodiscard]] std::uint16_t port() const { return port_; }
  [[nodiscard]] std::string address() const;
  /// Images produced across all connections.
  [[nodiscard]] std::uint64_t measurement_count() const { return count_.load(); }

 private:
  void accept_loop();
  void handle(detail::Socket socket, std::uint64_t index);

  optics::BenchConfig config_;
  ServerOptions options_;
  std::string host_;
  std::unique_ptr<detail::Socket> listener_;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> count_{0};
  std::thread acceptor_;
  std::mutex mutex_;
  std::vector<std::thread> workers_;
  std::vector<int> open_fds_;
};

/// Runs a server until the process is terminated.
[[noreturn]] void serve_sim(const optics::BenchConfig& config, const std::string& listen_address);

}  // namespace insitu::blackbox
