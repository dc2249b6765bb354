#include "castelet/stream.hpp"

#include "castelet/bvh.hpp"
#include "castelet/error.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

namespace castelet {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_f32(std::vector<std::uint8_t>& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const std::uint8_t* p) { return std::bit_cast<float>(get_u32(p)); }

constexpr std::uint8_t kMagic[4] = {'C', 'V', 'O', 'S'};

}  // namespace

std::vector<std::uint8_t> encode_handshake(const StreamHeader& header) {
  std::vector<std::uint8_t> out;
  out.reserve(18 + header.hierarchy_text.size());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  put_u16(out, header.protocol_version);
  put_u32(out, static_cast<std::uint32_t>(header.hierarchy_text.size()));
  out.insert(out.end(), header.hierarchy_text.begin(), header.hierarchy_text.end());
  put_f32(out, header.frame_time);
  put_u32(out, header.channel_count);
  return out;
}

void append_frame(std::vector<std::uint8_t>& out, std::uint32_t sequence, std::span<const float> channels) {
  put_u32(out, sequence);
  for (float f : channels) put_f32(out, f);
}

std::vector<std::uint8_t> encode_frame(const StreamFrame& frame) {
  std::vector<std::uint8_t> out;
  out.reserve(4 + 4 * frame.channels.size());
  append_frame(out, frame.sequence, frame.channels);
  return out;
}

StreamHeader make_stream_header(const Skeleton& skeleton, double frame_time) {
  StreamHeader h;
  h.hierarchy_text = serialize_bvh_hierarchy(skeleton);
  h.frame_time = static_cast<float>(frame_time);
  h.channel_count = static_cast<std::uint32_t>(skeleton.channel_count());
  return h;
}

bool StreamDecoder::try_handshake() {
  const std::size_t avail = buffer_.size() - read_pos_;
  const std::uint8_t* p = buffer_.data() + read_pos_;
  if (avail < 10) {
    // Reject a bad magic as soon as it is visible.
    if (avail > 0 && std::memcmp(p, kMagic, std::min<std::size_t>(avail, 4)) != 0)
      throw HandshakeError("bad magic");
    return false;
  }
  if (std::memcmp(p, kMagic, 4) != 0) throw HandshakeError("bad magic");
  const std::uint16_t version = get_u16(p + 4);
  if (version != kStreamVersion)
    throw HandshakeError("unsupported protocol version " + std::to_string(version));
  const std::uint32_t len = get_u32(p + 6);
  if (len > kMaxHierarchyBytes) throw HandshakeError("hierarchy text too large");
  const std::size_t total = 10 + static_cast<std::size_t>(len) + 8;
  if (avail < total) return false;

  StreamHeader h;
  h.protocol_version = version;
  h.hierarchy_text.assign(reinterpret_cast<const char*>(p + 10), len);
  h.frame_time = get_f32(p + 10 + len);
  h.channel_count = get_u32(p + 14 + len);

  Skeleton sk;
  try {
    sk = parse_bvh_hierarchy(h.hierarchy_text);
  } catch (const std::exception& e) {
    throw HandshakeError(std::string("hierarchy parse failure: ") + e.what());
  }
  if (sk.channel_count() != h.channel_count)
    throw HandshakeError("channel count " + std::to_string(h.channel_count) + " disagrees with hierarchy (" +
                         std::to_string(sk.channel_count()) + ")");
  if (!(h.frame_time > 0.0f)) throw HandshakeError("frame time must be positive");
  read_pos_ += total;
  skeleton_ = std::move(sk);
  header_ = std::move(h);
  return true;
}

bool StreamDecoder::try_frame(std::vector<StreamEvent>& events) {
  const std::size_t n = header_->channel_count;
  const std::size_t frame_bytes = 4 + 4 * n;
  if (buffer_.size() - read_pos_ < frame_bytes) return false;
  const std::uint8_t* p = buffer_.data() + read_pos_;
  const std::uint32_t seq = get_u32(p);
  read_pos_ += frame_bytes;

  if (last_sequence_ && seq <= *last_sequence_) {
    ++dropped_;
    events.emplace_back(StreamDrop{*last_sequence_, seq});
    return true;
  }
  if (last_sequence_ && seq != *last_sequence_ + 1) {
    ++gaps_;
    events.emplace_back(StreamGap{*last_sequence_ + 1, seq});
  }
  last_sequence_ = seq;
  StreamFrame f;
  f.sequence = seq;
  f.channels.resize(n);
  for (std::size_t i = 0; i < n; ++i) f.channels[i] = get_f32(p + 4 + 4 * i);
  ++delivered_;
  events.emplace_back(std::move(f));
  return true;
}

void StreamDecoder::feed(std::span<const std::uint8_t> bytes, std::vector<StreamEvent>& events) {
  if (poisoned_) throw HandshakeError("decoder already rejected this connection");
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
  try {
    if (!header_) {
      if (!try_handshake()) return;
      events.emplace_back(*header_);
    }
  } catch (...) {
    poisoned_ = true;
    throw;
  }
  while (try_frame(events)) {
  }
  if (read_pos_ > 0 && read_pos_ * 2 >= buffer_.size()) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(read_pos_));
    read_pos_ = 0;
  }
}

std::vector<StreamEvent> StreamDecoder::feed(std::span<const std::uint8_t> bytes) {
  std::vector<StreamEvent> events;
  feed(bytes, events);
  return events;
}

DecodedStream decode_stream(std::span<const std::uint8_t> bytes) {
  StreamDecoder dec;
  DecodedStream out;
  for (auto& ev : dec.feed(bytes)) {
    if (auto* h = std::get_if<StreamHeader>(&ev)) out.header = std::move(*h);
    else if (auto* f = std::get_if<StreamFrame>(&ev)) out.frames.push_back(std::move(*f));
    else if (auto* g = std::get_if<StreamGap>(&ev)) out.gaps.push_back(*g);
    else if (auto* d = std::get_if<StreamDrop>(&ev)) out.drops.push_back(*d);
  }
  if (!dec.has_header()) throw HandshakeError("stream ended before the handshake completed");
  out.discarded_trailing_bytes = dec.pending_bytes();
  return out;
}

}  // namespace castelet
