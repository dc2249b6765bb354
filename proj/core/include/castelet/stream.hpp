#pragma once

#include "castelet/skeleton.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace castelet {

// Mocap stream wire format, little-endian:
//   handshake: "CVOS" | u16 version | u32 hierarchy length | hierarchy bytes |
//              f32 frame_time | u32 channel_count
//   frame:     u32 sequence | channel_count x f32
inline constexpr std::uint16_t kStreamVersion = 1;
inline constexpr std::uint32_t kMaxHierarchyBytes = 16u << 20;

struct StreamHeader {
  std::uint16_t protocol_version = kStreamVersion;
  std::string hierarchy_text;
  float frame_time = 0.0f;
  std::uint32_t channel_count = 0;
};

struct StreamFrame {
  std::uint32_t sequence = 0;
  std::vector<float> channels;
};

std::vector<std::uint8_t> encode_handshake(const StreamHeader& header);
std::vector<std::uint8_t> encode_frame(const StreamFrame& frame);
void append_frame(std::vector<std::uint8_t>& out, std::uint32_t sequence, std::span<const float> channels);

// Builds a header for a skeleton, with the hierarchy in canonical BVH form.
StreamHeader make_stream_header(const Skeleton& skeleton, double frame_time);

struct StreamGap {
  std::uint32_t expected = 0;
  std::uint32_t received = 0;
};

struct StreamDrop {
  std::uint32_t last = 0;
  std::uint32_t received = 0;
};

using StreamEvent = std::variant<StreamHeader, StreamFrame, StreamGap, StreamDrop>;

// Incremental decoder for one connection. feed() accepts arbitrary byte
// chunks. A rejected handshake throws HandshakeError and poisons the decoder.
class StreamDecoder {
 public:
  std::vector<StreamEvent> feed(std::span<const std::uint8_t> bytes);
  void feed(std::span<const std::uint8_t> bytes, std::vector<StreamEvent>& events);

  bool has_header() const { return header_.has_value(); }
  const std::optional<StreamHeader>& header() const { return header_; }
  const std::optional<Skeleton>& skeleton() const { return skeleton_; }
  std::size_t frames_delivered() const { return delivered_; }
  std::size_t gap_count() const { return gaps_; }
  std::size_t dropped_count() const { return dropped_; }
  std::size_t pending_bytes() const { return buffer_.size() - read_pos_; }

 private:
  bool try_handshake();
  bool try_frame(std::vector<StreamEvent>& events);

  std::vector<std::uint8_t> buffer_;
  std::size_t read_pos_ = 0;
  std::optional<StreamHeader> header_;
  std::optional<Skeleton> skeleton_;
  std::optional<std::uint32_t> last_sequence_;
  std::size_t delivered_ = 0;
  std::size_t gaps_ = 0;
  std::size_t dropped_ = 0;
  bool poisoned_ = false;
};

struct DecodedStream {
  StreamHeader header;
  std::vector<StreamFrame> frames;
  std::vector<StreamGap> gaps;
  std::vector<StreamDrop> drops;
  std::size_t discarded_trailing_bytes = 0;
};

// Whole-buffer convenience over StreamDecoder; a partial trailing frame is discarded.
DecodedStream decode_stream(std::span<const std::uint8_t> bytes);

}  // namespace castelet
