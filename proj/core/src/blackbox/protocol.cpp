#include "insitu/blackbox/protocol.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include "insitu/errors.hpp"

namespace insitu::blackbox {

namespace {

static_assert(std::numeric_limits<float>::is_iec559);

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{in[offset + i]} << (8 * i);
  return v;
}

void put_f32(std::vector<std::uint8_t>& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

double get_f32(std::span<const std::uint8_t> in, std::size_t offset) {
  return static_cast<double>(std::bit_cast<float>(get_u32(in, offset)));
}

void require_bytes(std::span<const std::uint8_t> payload, std::size_t expected, const char* what) {
  if (payload.size() != expected) {
    throw ProtocolError(std::string(what) + " payload is " + std::to_string(payload.size()) +
                        " bytes, expected " + std::to_string(expected));
  }
}

std::size_t checked_count(std::span<const std::uint8_t> payload, std::size_t item_bytes,
                          const char* what) {
  if (payload.size() < 4) throw ProtocolError(std::string(what) + " payload lacks a count");
  const std::size_t count = get_u32(payload, 0);
  if (item_bytes == 0 || (payload.size() - 4) / item_bytes != count ||
      (payload.size() - 4) % item_bytes != 0) {
    throw ProtocolError(std::string(what) + " payload of " + std::to_string(payload.size()) +
                        " bytes does not hold " + std::to_string(count) + " arrays");
  }
  return count;
}

}  // namespace

bool is_known_type(std::uint8_t type) {
  switch (type) {
    case 0x01: case 0x02: case 0x03: case 0x04: case 0x05:
    case 0x83: case 0x84: case 0x85: case 0x7F:
      return true;
    default:
      return false;
  }
}

MsgType to_msg_type(std::uint8_t type) {
  if (!is_known_type(type)) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "0x%02X", type);
    throw ProtocolError(std::string("unknown message type ") + buf);
  }
  return static_cast<MsgType>(type);
}

std::string to_string(MsgType type) {
  switch (type) {
    case MsgType::kHello: return "HELLO";
    case MsgType::kDescribe: return "DESCRIBE";
    case MsgType::kSetInput: return "SET_INPUT";
    case MsgType::kMeasure: return "MEASURE";
    case MsgType::kBatch: return "BATCH";
    case MsgType::kInputOk: return "INPUT_OK";
    case MsgType::kImage: return "IMAGE";
    case MsgType::kImages: return "IMAGES";
    case MsgType::kError: return "ERROR";
  }
  return "?";
}

std::vector<std::uint8_t> encode_frame(MsgType type, std::span<const std::uint8_t> payload) {
  if (payload.size() > kMaxPayloadBytes) {
    throw ProtocolError("frame payload of " + std::to_string(payload.size()) +
                        " bytes exceeds the 64 MiB limit");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kFrameHeaderBytes + payload.size());
  put_u32(out, static_cast<std::uint32_t>(payload.size()));
  out.push_back(static_cast<std::uint8_t>(type));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

std::vector<std::uint8_t> encode_frame(const Frame& frame) {
  return encode_frame(to_msg_type(frame.type), frame.payload);
}

std::uint32_t parse_header(std::span<const std::uint8_t, kFrameHeaderBytes> header,
                           std::uint8_t* type) {
  const std::uint32_t length = get_u32(header, 0);
  if (length > kMaxPayloadBytes) {
    throw ProtocolError("frame length " + std::to_string(length) + " exceeds the 64 MiB limit");
  }
  *type = header[4];
  return length;
}

std::optional<Frame> decode_frame(std::span<const std::uint8_t> bytes, std::size_t* consumed) {
  if (bytes.size() < kFrameHeaderBytes) return std::nullopt;
  std::uint8_t type = 0;
  const std::uint32_t length = parse_header(bytes.first<kFrameHeaderBytes>(), &type);
  to_msg_type(type);
  if (bytes.size() < kFrameHeaderBytes + length) return std::nullopt;
  Frame frame{type, {bytes.begin() + kFrameHeaderBytes, bytes.begin() + kFrameHeaderBytes + length}};
  if (consumed != nullptr) *consumed = kFrameHeaderBytes + length;
  return frame;
}

std::vector<std::uint8_t> encode_hello(std::uint32_t version) {
  std::vector<std::uint8_t> out;
  put_u32(out, version);
  return out;
}

std::uint32_t decode_hello(std::span<const std::uint8_t> payload) {
  require_bytes(payload, 4, "HELLO");
  return get_u32(payload, 0);
}

std::vector<std::uint8_t> encode_describe(const EnvDescriptor& d) {
  std::vector<std::uint8_t> out;
  put_u32(out, static_cast<std::uint32_t>(d.grid.rows));
  put_u32(out, static_cast<std::uint32_t>(d.grid.cols));
  put_u32(out, d.phase_levels);
  put_u32(out, static_cast<std::uint32_t>(d.sensor.rows));
  put_u32(out, static_cast<std::uint32_t>(d.sensor.cols));
  return out;
}

EnvDescriptor decode_describe(std::span<const std::uint8_t> payload,
                              std::uint32_t protocol_version) {
  require_bytes(payload, 20, "DESCRIBE");
  EnvDescriptor d;
  d.grid = {get_u32(payload, 0), get_u32(payload, 4)};
  d.phase_levels = get_u32(payload, 8);
  d.sensor = {get_u32(payload, 12), get_u32(payload, 16)};
  d.protocol_version = protocol_version;
  if (d.grid.size() == 0 || d.sensor.size() == 0 || d.phase_levels < 2) {
    throw ProtocolError("DESCRIBE advertises an empty grid or fewer than 2 phase levels");
  }
  return d;
}

std::vector<std::uint8_t> encode_f32(std::span<const double> values) {
  std::vector<std::uint8_t> out;
  out.reserve(values.size() * 4);
  for (double v : values) put_f32(out, v);
  return out;
}

std::vector<double> decode_f32(std::span<const std::uint8_t> payload, std::size_t count) {
  require_bytes(payload, count * 4, "float32 array");
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = get_f32(payload, 4 * i);
  return out;
}

std::vector<std::uint8_t> encode_phase(const PhaseMap& phase) { return encode_f32(phase.values()); }

PhaseMap decode_phase(std::span<const std::uint8_t> payload, Shape grid) {
  auto values = decode_f32(payload, grid.size());
  for (double v : values) {
    if (!std::isfinite(v)) throw ProtocolError("phase array contains non-finite values");
  }
  return PhaseMap(grid, std::move(values));
}

std::vector<std::uint8_t> encode_phases(std::span<const PhaseMap> phases) {
  std::vector<std::uint8_t> out;
  put_u32(out, static_cast<std::uint32_t>(phases.size()));
  for (const PhaseMap& p : phases) {
    for (double v : p.values()) put_f32(out, v);
  }
  return out;
}

std::vector<PhaseMap> decode_phases(std::span<const std::uint8_t> payload, Shape grid) {
  const std::size_t count = checked_count(payload, grid.size() * 4, "BATCH");
  std::vector<PhaseMap> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(decode_phase(payload.subspan(4 + k * grid.size() * 4, grid.size() * 4), grid));
  }
  return out;
}

std::vector<std::uint8_t> encode_image(const IntensityImage& image) {
  return encode_f32(image.values());
}

IntensityImage decode_image(std::span<const std::uint8_t> payload, Shape sensor) {
  try {
    return IntensityImage(sensor, decode_f32(payload, sensor.size()));
  } catch (const DataError& e) {
    throw ProtocolError(std::string("IMAGE: ") + e.what());
  }
}

std::vector<std::uint8_t> encode_images(std::span<const IntensityImage> images) {
  std::vector<std::uint8_t> out;
  put_u32(out, static_cast<std::uint32_t>(images.size()));
  for (const IntensityImage& im : images) {
    for (double v : im.values()) put_f32(out, v);
  }
  return out;
}

std::vector<IntensityImage> decode_images(std::span<const std::uint8_t> payload, Shape sensor) {
  const std::size_t count = checked_count(payload, sensor.size() * 4, "IMAGES");
  std::vector<IntensityImage> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(decode_image(payload.subspan(4 + k * sensor.size() * 4, sensor.size() * 4), sensor));
  }
  return out;
}

std::vector<std::uint8_t> encode_error(const ErrorPayload& error) {
  std::vector<std::uint8_t> out;
  put_u16(out, error.code);
  out.insert(out.end(), error.message.begin(), error.message.end());
  return out;
}

ErrorPayload decode_error(std::span<const std::uint8_t> payload) {
  if (payload.size() < 2) throw ProtocolError("ERROR payload lacks a code");
  ErrorPayload e;
  e.code = static_cast<std::uint16_t>(payload[0] | (payload[1] << 8));
  e.message.assign(payload.begin() + 2, payload.end());
  return e;
}

}  // namespace insitu::blackbox
