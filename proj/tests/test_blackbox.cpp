#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <random>

#include "doctest.h"
#include "insitu/blackbox/environment.hpp"
#include "insitu/blackbox/protocol.hpp"
#include "insitu/blackbox/remote.hpp"
#include "insitu/errors.hpp"
#include "insitu/rng.hpp"

using namespace insitu;
using namespace insitu::blackbox;
using namespace std::chrono_literals;

namespace {

optics::BenchConfig small_bench(bool noise) {
  optics::BenchConfig c;
  c.shape = {16, 16};
  c.distance_mm = 20.0;
  c.noise.enabled = noise;
  c.seed = 5;
  c.aberration = optics::AberrationConfig{{0.2, 0.1, 0.1}, 1, 0};
  return c;
}

PhaseMap random_phase(optics::Shape s, std::uint64_t seed) {
  Rng rng = make_rng(seed, 2);
  std::uniform_real_distribution<double> u(-4.0, 10.0);
  PhaseMap p(s);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = u(rng);
  return p;
}

// Bare TCP client for speaking raw bytes at the server.
class RawClient {
 public:
  explicit RawClient(std::uint16_t port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in a{};
    a.sin_family = AF_INET;
    a.sin_port = htons(port);
    a.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    REQUIRE(::connect(fd_, reinterpret_cast<sockaddr*>(&a), sizeof a) == 0);
    timeval tv{5, 0};
    ::setsockopt(fd_, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  }
  ~RawClient() { ::close(fd_); }
  void send(const std::vector<std::uint8_t>& bytes) {
    REQUIRE(::send(fd_, bytes.data(), bytes.size(), MSG_NOSIGNAL) == ssize_t(bytes.size()));
  }
  // Next frame, or nullopt once the server closed the connection.
  std::optional<Frame> recv() {
    for (;;) {
      std::size_t used = 0;
      if (auto f = decode_frame(buf_, &used)) {
        buf_.erase(buf_.begin(), buf_.begin() + std::ptrdiff_t(used));
        return f;
      }
      std::uint8_t chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n <= 0) return std::nullopt;
      buf_.insert(buf_.end(), chunk, chunk + n);
    }
  }

 private:
  int fd_ = -1;
  std::vector<std::uint8_t> buf_;
};

std::vector<std::uint8_t> random_bytes(Rng& rng, std::size_t n) {
  std::uniform_int_distribution<int> u(0, 255);
  std::vector<std::uint8_t> v(n);
  for (auto& b : v) b = std::uint8_t(u(rng));
  return v;
}

}  // namespace

TEST_SUITE("blackbox") {

TEST_CASE("frame encoding round trips") {
  Rng rng = make_rng(1);
  const MsgType types[] = {MsgType::kHello,   MsgType::kDescribe, MsgType::kSetInput,
                           MsgType::kMeasure, MsgType::kBatch,    MsgType::kInputOk,
                           MsgType::kImage,   MsgType::kImages,   MsgType::kError};
  for (MsgType t : types) {
    for (std::size_t n : {0u, 1u, 17u, 4096u}) {
      const auto payload = random_bytes(rng, n);
      const auto bytes = encode_frame(t, payload);
      CHECK(bytes.size() == kFrameHeaderBytes + n);
      CHECK(bytes[0] == (n & 0xff));
      CHECK(bytes[4] == std::uint8_t(t));
      std::size_t used = 0;
      const auto f = decode_frame(bytes, &used);
      REQUIRE(f);
      CHECK(used == bytes.size());
      CHECK(f->type == std::uint8_t(t));
      CHECK(f->payload == payload);
      CHECK_FALSE(decode_frame(std::span(bytes).first(bytes.size() - 1), &used));
    }
  }
  std::vector<std::uint8_t> unknown{0, 0, 0, 0, 0x42};
  std::size_t used = 0;
  CHECK_THROWS_AS(decode_frame(unknown, &used), ProtocolError);
  std::vector<std::uint8_t> huge{0xff, 0xff, 0xff, 0x7f, 0x04};
  CHECK_THROWS_AS(decode_frame(huge, &used), ProtocolError);
}

TEST_CASE("payload codecs round trip") {
  Rng rng = make_rng(2);
  CHECK(decode_hello(encode_hello(7)) == 7);
  const EnvDescriptor d{{32, 16}, 256, {32, 16}, kProtocolVersion};
  CHECK(encode_describe(d).size() == 20);
  CHECK(decode_describe(encode_describe(d)) == d);

  const optics::Shape s{8, 4};
  const PhaseMap p = to_wire_precision(random_phase(s, 3));
  CHECK(decode_phase(encode_phase(p), s) == p);
  const std::vector<PhaseMap> ps{p, to_wire_precision(random_phase(s, 4))};
  CHECK(decode_phases(encode_phases(ps), s) == ps);
  CHECK(decode_phases(encode_phases(std::vector<PhaseMap>{}), s).empty());
  std::vector<double> iv(s.size());
  std::uniform_real_distribution<double> u(0, 100);
  for (double& x : iv) x = u(rng);
  const IntensityImage img = to_wire_precision(IntensityImage(s, iv));
  CHECK(decode_image(encode_image(img), s) == img);
  const std::vector<IntensityImage> imgs{img, img};
  CHECK(decode_images(encode_images(imgs), s) == imgs);
  const ErrorPayload e{4, "dimension mismatch: 16x16 vs 8x4 \xce\xbc"};
  CHECK(decode_error(encode_error(e)) == e);

  auto bad = encode_phase(p);
  bad.pop_back();
  CHECK_THROWS_AS(decode_phase(bad, s), ProtocolError);
  CHECK_THROWS_AS(decode_hello(std::vector<std::uint8_t>{1, 2}), ProtocolError);
}

TEST_CASE("local environment accounting") {
  LocalEnvironment env(small_bench(true));
  CHECK(env.evaluate_batch(std::span<const PhaseMap>{}).empty());
  CHECK(env.measurement_count() == 0);
  const std::vector<PhaseMap> five(5, random_phase({16, 16}, 1));
  env.evaluate_batch(five);
  env.evaluate_batch(five);
  CHECK(env.measurement_count() == 10);
  const std::vector<PhaseMap> wrong{PhaseMap({8, 8})};
  CHECK_THROWS_AS(env.evaluate_batch(wrong), DimensionError);
  // Only the public descriptor is visible.
  CHECK(env.descriptor() == EnvDescriptor{{16, 16}, 256, {16, 16}, kProtocolVersion});
}

TEST_CASE("remote loopback is bit-identical to the local binding") {
  const auto cfg = small_bench(true);
  SimServer server(cfg, "127.0.0.1:0");
  server.start();
  RemoteEnvironment remote(server.address());
  LocalEnvironment local(cfg, 0);
  CHECK(remote.descriptor() == local.descriptor());

  const std::vector<PhaseMap> batch{random_phase(cfg.shape, 10), random_phase(cfg.shape, 11),
                                    random_phase(cfg.shape, 12)};
  const PhaseMap input = random_phase(cfg.shape, 13);
  CHECK(remote.evaluate_batch(batch) == local.evaluate_batch(batch));
  CHECK(remote.evaluate_batch(&input, batch) == local.evaluate_batch(&input, batch));
  CHECK(remote.evaluate_batch(std::span(batch).first(1)) == local.evaluate_batch(std::span(batch).first(1)));
  CHECK(remote.evaluate_batch(std::span<const PhaseMap>{}).empty());
  CHECK(remote.measurement_count() == 7);
  CHECK(server.measurement_count() == 7);
  server.stop();
}

TEST_CASE("server connections: determinism and independent streams") {
  SimServer quiet(small_bench(false), "127.0.0.1:0");
  quiet.start();
  {
    RemoteEnvironment c(quiet.address());
    const std::vector<PhaseMap> one{random_phase({16, 16}, 20)};
    CHECK(c.evaluate_batch(one) == c.evaluate_batch(one));
  }
  quiet.stop();

  const std::vector<PhaseMap> one{random_phase({16, 16}, 21)};
  auto run = [&] {
    SimServer s(small_bench(true), "127.0.0.1:0");
    s.start();
    RemoteEnvironment a(s.address());
    RemoteEnvironment b(s.address());
    auto ia = a.evaluate_batch(one);
    auto ib = b.evaluate_batch(one);
    s.stop();
    return std::make_pair(ia, ib);
  };
  const auto first = run();
  const auto second = run();
  CHECK(first.first != first.second);  // independent noise per connection
  CHECK(first == second);              // and reproducible across runs
}

TEST_CASE("handshake failures") {
  SimServer future(small_bench(false), "127.0.0.1:0", {.protocol_version = kProtocolVersion + 1});
  future.start();
  CHECK_THROWS_AS(RemoteEnvironment(future.address(), 5s), ProtocolError);
  future.stop();

  SimServer server(small_bench(false), "127.0.0.1:0");
  server.start();
  {
    RawClient raw(server.port());
    raw.send({'G', 'E', 'T', ' ', '/', '\r', '\n'});
    const auto reply = raw.recv();
    REQUIRE(reply);
    CHECK(reply->type == std::uint8_t(MsgType::kError));
    CHECK(decode_error(reply->payload).message.find("magic") != std::string::npos);
    CHECK_FALSE(raw.recv());  // closed
  }
  {
    // Client speaks a newer version.
    RawClient raw(server.port());
    raw.send(encode_frame(MsgType::kHello, encode_hello(kProtocolVersion + 1)));
    const auto reply = raw.recv();
    REQUIRE(reply);
    CHECK(reply->type == std::uint8_t(MsgType::kError));
    CHECK(decode_error(reply->payload).code == std::uint16_t(ErrorCode::kVersionMismatch));
    CHECK_FALSE(raw.recv());
  }
  server.stop();
}

TEST_CASE("malformed frames get an ERROR and the connection survives") {
  const auto cfg = small_bench(false);
  SimServer server(cfg, "127.0.0.1:0");
  server.start();
  RawClient raw(server.port());
  raw.send(encode_frame(MsgType::kHello, encode_hello(kProtocolVersion)));
  auto desc = raw.recv();
  REQUIRE(desc);
  CHECK(desc->type == std::uint8_t(MsgType::kDescribe));

  raw.send(encode_frame(MsgType::kMeasure, std::vector<std::uint8_t>{1, 2, 3}));
  auto err = raw.recv();
  REQUIRE(err);
  CHECK(err->type == std::uint8_t(MsgType::kError));

  raw.send(encode_frame(MsgType::kImage, std::vector<std::uint8_t>{}));  // server-only type
  err = raw.recv();
  REQUIRE(err);
  CHECK(err->type == std::uint8_t(MsgType::kError));

  raw.send(encode_frame(MsgType::kMeasure, encode_phase(PhaseMap(cfg.shape))));
  const auto img = raw.recv();
  REQUIRE(img);
  CHECK(img->type == std::uint8_t(MsgType::kImage));
  CHECK(decode_image(img->payload, cfg.shape).size() == cfg.shape.size());
  server.stop();
}

TEST_CASE("remote failures surface as instrument errors") {
  CHECK_THROWS_AS(RemoteEnvironment("127.0.0.1:1", 2s), InstrumentError);
  CHECK_THROWS_AS(RemoteEnvironment("not-an-address", 2s), Error);
}

}  // TEST_SUITE
