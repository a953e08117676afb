#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rmx/skeleton.hpp"

namespace rmx::io {

enum class MessageType : std::uint8_t {
  kSubjectFrame = 0x01,
  kGeneratedFrame = 0x02,
  kEndOfStream = 0x03,
  kError = 0x04,
};

inline constexpr std::array<std::uint8_t, 4> kWireMagic = {'R', 'M', 'X', '1'};
inline constexpr std::size_t kHeaderBytes = 10;
inline constexpr std::size_t kFrameMessageBytes = kHeaderBytes + kFeaturesPerPerson * 4;  // 214

/// One wire message. `payload` is used by frame types, `reason` by errors.
struct FrameMessage {
  MessageType type = MessageType::kSubjectFrame;
  std::uint8_t person_id = 0;
  std::uint32_t frame_index = 0;
  std::array<float, kFeaturesPerPerson> payload{};
  std::string reason;

  static FrameMessage subject(const PoseFrame& frame);
  static FrameMessage generated(const PoseFrame& frame);
  static FrameMessage end_of_stream(std::uint32_t frame_index = 0);
  static FrameMessage error(std::string reason, std::uint32_t frame_index = 0);
  PoseFrame to_pose() const;

  friend bool operator==(const FrameMessage&, const FrameMessage&) = default;
};

enum class ProtocolError {
  kTooShort,        // fewer bytes than a header
  kBadMagic,
  kUnknownType,
  kLengthMismatch,  // size does not match the type's layout
};

std::string_view to_string(ProtocolError e);

/// Header: magic(4) | type(1) | person_id(1) | frame_index(4, LE);
/// frame types append 51 LE float32; errors append u16 length + UTF-8
/// (reasons longer than 65535 bytes are cut).
std::vector<std::uint8_t> encode_frame(const FrameMessage& msg);
/// Never throws on malformed input; returns the rejection instead.
std::variant<FrameMessage, ProtocolError> decode_frame(std::span<const std::uint8_t> bytes);

/// Total message size implied by a buffer holding at least the header (and,
/// for errors, the 2-byte length), or 0 when more bytes are needed to tell.
/// Returns a ProtocolError for bad magic or type.
std::variant<std::size_t, ProtocolError> expected_length(std::span<const std::uint8_t> prefix);

}  // namespace rmx::io
