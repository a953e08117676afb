#include "rmx/io/protocol.hpp"

#include <bit>
#include <algorithm>
#include <cstring>

namespace rmx::io {
namespace {

static_assert(std::endian::native == std::endian::little,
              "wire encoding assumes a little-endian host");

bool known_type(std::uint8_t t) { return t >= 0x01 && t <= 0x04; }

bool is_frame_type(MessageType t) {
  return t == MessageType::kSubjectFrame || t == MessageType::kGeneratedFrame;
}

FrameMessage frame_message(MessageType type, const PoseFrame& frame) {
  FrameMessage m;
  m.type = type;
  m.person_id = static_cast<std::uint8_t>(frame.person_id);
  m.frame_index = static_cast<std::uint32_t>(frame.frame_index);
  m.payload = frame.features();
  return m;
}

}  // namespace

FrameMessage FrameMessage::subject(const PoseFrame& frame) {
  return frame_message(MessageType::kSubjectFrame, frame);
}

FrameMessage FrameMessage::generated(const PoseFrame& frame) {
  return frame_message(MessageType::kGeneratedFrame, frame);
}

FrameMessage FrameMessage::end_of_stream(std::uint32_t frame_index) {
  FrameMessage m;
  m.type = MessageType::kEndOfStream;
  m.frame_index = frame_index;
  return m;
}

FrameMessage FrameMessage::error(std::string reason, std::uint32_t frame_index) {
  FrameMessage m;
  m.type = MessageType::kError;
  m.frame_index = frame_index;
  m.reason = std::move(reason);
  return m;
}

PoseFrame FrameMessage::to_pose() const {
  return PoseFrame::from_features(payload, person_id, frame_index);
}

std::string_view to_string(ProtocolError e) {
  switch (e) {
    case ProtocolError::kTooShort: return "too short";
    case ProtocolError::kBadMagic: return "bad magic";
    case ProtocolError::kUnknownType: return "unknown message type";
    case ProtocolError::kLengthMismatch: return "length mismatch";
  }
  return "unknown protocol error";
}

std::vector<std::uint8_t> encode_frame(const FrameMessage& msg) {
  std::vector<std::uint8_t> out(kWireMagic.begin(), kWireMagic.end());
  out.push_back(static_cast<std::uint8_t>(msg.type));
  out.push_back(msg.person_id);
  const auto* idx = reinterpret_cast<const std::uint8_t*>(&msg.frame_index);
  out.insert(out.end(), idx, idx + 4);
  if (is_frame_type(msg.type)) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(msg.payload.data());
    out.insert(out.end(), p, p + msg.payload.size() * 4);
  } else if (msg.type == MessageType::kError) {
    const std::size_t n = std::min<std::size_t>(msg.reason.size(), 0xffff);
    out.push_back(static_cast<std::uint8_t>(n & 0xff));
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.insert(out.end(), msg.reason.begin(), msg.reason.begin() + static_cast<std::ptrdiff_t>(n));
  }
  return out;
}

std::variant<std::size_t, ProtocolError> expected_length(std::span<const std::uint8_t> prefix) {
  const std::size_t n = std::min(prefix.size(), kWireMagic.size());
  if (std::memcmp(prefix.data(), kWireMagic.data(), n) != 0) return ProtocolError::kBadMagic;
  if (prefix.size() < 5) return std::size_t{0};
  if (!known_type(prefix[4])) return ProtocolError::kUnknownType;
  switch (static_cast<MessageType>(prefix[4])) {
    case MessageType::kSubjectFrame:
    case MessageType::kGeneratedFrame:
      return kFrameMessageBytes;
    case MessageType::kEndOfStream:
      return kHeaderBytes;
    case MessageType::kError:
      if (prefix.size() < kHeaderBytes + 2) return std::size_t{0};
      return kHeaderBytes + 2 + (prefix[kHeaderBytes] | (prefix[kHeaderBytes + 1] << 8));
  }
  return ProtocolError::kUnknownType;
}

std::variant<FrameMessage, ProtocolError> decode_frame(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderBytes) return ProtocolError::kTooShort;
  if (std::memcmp(bytes.data(), kWireMagic.data(), 4) != 0) return ProtocolError::kBadMagic;
  if (!known_type(bytes[4])) return ProtocolError::kUnknownType;
  FrameMessage m;
  m.type = static_cast<MessageType>(bytes[4]);
  m.person_id = bytes[5];
  std::memcpy(&m.frame_index, bytes.data() + 6, 4);
  const std::uint8_t* body = bytes.data() + kHeaderBytes;
  const std::size_t body_len = bytes.size() - kHeaderBytes;
  if (is_frame_type(m.type)) {
    if (bytes.size() != kFrameMessageBytes) return ProtocolError::kLengthMismatch;
    std::memcpy(m.payload.data(), body, body_len);
  } else if (m.type == MessageType::kEndOfStream) {
    if (body_len != 0) return ProtocolError::kLengthMismatch;
  } else {
    if (body_len < 2) return ProtocolError::kLengthMismatch;
    const std::size_t n = body[0] | (body[1] << 8);
    if (body_len != 2 + n) return ProtocolError::kLengthMismatch;
    m.reason.assign(reinterpret_cast<const char*>(body + 2), n);
  }
  return m;
}

}  // namespace rmx::io
