#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "insitu/blackbox/environment.hpp"

namespace insitu::blackbox {

// Frame: [u32 LE payload length][u8 type][payload]. All numbers little-endian,
// phases and images as float32 row-major arrays.
enum class MsgType : std::uint8_t {
  kHello = 0x01,     // {u32 version}
  kDescribe = 0x02,  // {u32 H, u32 W, u32 levels, u32 SH, u32 SW}
  kSetInput = 0x03,  // {f32[H*W]} or empty to clear the input phase
  kMeasure = 0x04,   // {f32[H*W]}
  kBatch = 0x05,     // {u32 count, count x f32[H*W]}
  kInputOk = 0x83,   // {} acknowledges SET_INPUT
  kImage = 0x84,     // {f32[SH*SW]}
  kImages = 0x85,    // {u32 count, count x f32[SH*SW]}
  kError = 0x7F,     // {u16 code, utf-8 message}
};

inline constexpr std::size_t kFrameHeaderBytes = 5;
inline constexpr std::uint32_t kMaxPayloadBytes = 64u << 20;

enum class ErrorCode : std::uint16_t {
  kMalformedFrame = 1,
  kUnknownType = 2,
  kVersionMismatch = 3,
  kDimension = 4,
  kState = 5,
  kInternal = 6,
};

struct Frame {
  std::uint8_t type = 0;  // raw byte; see to_msg_type()
  std::vector<std::uint8_t> payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

bool is_known_type(std::uint8_t type);
/// Throws ProtocolError for bytes that are not a message type.
MsgType to_msg_type(std::uint8_t type);
std::string to_string(MsgType type);

std::vector<std::uint8_t> encode_frame(MsgType type, std::span<const std::uint8_t> payload);
std::vector<std::uint8_t> encode_frame(const Frame& frame);

/// Parses one frame from the front of `bytes`. Returns nullopt when more bytes
/// are needed; otherwise sets *consumed. Oversized lengths and unknown types
/// throw ProtocolError.
std::optional<Frame> decode_frame(std::span<const std::uint8_t> bytes, std::size_t* consumed);

/// Validates a frame header: returns the payload length.
std::uint32_t parse_header(std::span<const std::uint8_t, kFrameHeaderBytes> header,
                           std::uint8_t* type);

// Payload codecs. Decoders throw ProtocolError on size mismatches.
std::vector<std::uint8_t> encode_hello(std::uint32_t version);
std::uint32_t decode_hello(std::span<const std::uint8_t> payload);

std::vector<std::uint8_t> encode_describe(const EnvDescriptor& desc);
EnvDescriptor decode_describe(std::span<const std::uint8_t> payload,
                              std::uint32_t protocol_version = kProtocolVersion);

std::vector<std::uint8_t> encode_f32(std::span<const double> values);
std::vector<double> decode_f32(std::span<const std::uint8_t> payload, std::size_t count);

std::vector<std::uint8_t> encode_phase(const PhaseMap& phase);
PhaseMap decode_phase(std::span<const std::uint8_t> payload, Shape grid);

std::vector<std::uint8_t> encode_phases(std::span<const PhaseMap> phases);
std::vector<PhaseMap> decode_phases(std::span<const std::uint8_t> payload, Shape grid);

std::vector<std::uint8_t> encode_image(const IntensityImage& image);
IntensityImage decode_image(std::span<const std::uint8_t> payload, Shape sensor);

std::vector<std::uint8_t> encode_images(std::span<const IntensityImage> images);
std::vector<IntensityImage> decode_images(std::span<const std::uint8_t> payload, Shape sensor);

struct ErrorPayload {
  std::uint16_t code = 0;
  std::string message;

  friend bool operator==(const ErrorPayload&, const ErrorPayload&) = default;
};
std::vector<std::uint8_t> encode_error(const ErrorPayload& error);
ErrorPayload decode_error(std::span<const std::uint8_t> payload);

}  // namespace insitu::blackbox
