#pragma once

// Wire format v1 for EncodedFrame.
//
//   "EPMF" | version u8 | flags u8 | sample_rate u32 | window_len u16 |
//   token_len u16 | total_tokens u16 | kept_count u16 | delta0 f32 | alpha f32 |
//   fine_bits u8 | coarse_bits u8 | band bitmap (LSB-first) |
//   kept indices u16[K] | codes, MSB-first at their widths, zero-padded |
//   crc32 u32 over everything before it
//
// Multi-byte integers and floats are little-endian.

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vibcodec/frame.hpp"

namespace vibcodec {

inline constexpr std::array<std::uint8_t, 4> kFrameMagic{'E', 'P', 'M', 'F'};
inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::size_t kFrameHeaderBytes = 28;
inline constexpr std::size_t kFrameCrcBytes = 4;

enum class FrameErrorKind {
  bad_magic,
  unsupported_version,
  truncated,
  invalid_header,
  kept_exceeds_total,
  crc_mismatch,
  index_out_of_range,
  indices_not_ascending,
  invalid_padding,
  trailing_data,
};

inline const char* to_string(FrameErrorKind k) {
  switch (k) {
    case FrameErrorKind::bad_magic: return "bad magic";
    case FrameErrorKind::unsupported_version: return "unsupported version";
    case FrameErrorKind::truncated: return "truncated frame";
    case FrameErrorKind::invalid_header: return "invalid header";
    case FrameErrorKind::kept_exceeds_total: return "kept_count exceeds total_tokens";
    case FrameErrorKind::crc_mismatch: return "CRC mismatch";
    case FrameErrorKind::index_out_of_range: return "kept index out of range";
    case FrameErrorKind::indices_not_ascending: return "kept indices not ascending";
    case FrameErrorKind::invalid_padding: return "nonzero payload padding";
    case FrameErrorKind::trailing_data: return "trailing bytes after frame";
  }
  return "unknown frame error";
}

class FrameError : public std::runtime_error {
 public:
  FrameError(FrameErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(to_string(kind)) + (detail.empty() ? "" : ": " + detail)), kind_(kind) {}
  FrameErrorKind kind() const { return kind_; }

 private:
  FrameErrorKind kind_;
};

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

namespace detail {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  std::vector<std::uint8_t>& buffer() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() { return in_[pos_++]; }
  std::uint16_t u16() {
    const auto v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::size_t pos() const { return pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

/// Appends fixed-width two's-complement values most-significant bit first.
class BitWriter {
 public:
  void put(std::int32_t value, int width) {
    const auto bits = static_cast<std::uint32_t>(value) & ((1u << width) - 1u);
    for (int b = width - 1; b >= 0; --b) {
      if (used_ == 0) out_.push_back(0);
      if ((bits >> b) & 1u) out_.back() |= static_cast<std::uint8_t>(0x80u >> used_);
      used_ = (used_ + 1) % 8;
    }
  }
  const std::vector<std::uint8_t>& bytes() const { return out_; }

 private:
  std::vector<std::uint8_t> out_;
  int used_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> in) : in_(in) {}
  std::int32_t get(int width) {
    std::uint32_t v = 0;
    for (int b = 0; b < width; ++b) {
      const std::uint8_t byte = in_[bit_ / 8];
      v = (v << 1) | ((byte >> (7 - bit_ % 8)) & 1u);
      ++bit_;
    }
    // Sign-extend.
    if (v & (1u << (width - 1))) v |= ~((1u << width) - 1u);
    return static_cast<std::int32_t>(v);
  }
  bool padding_is_zero() const {
    for (std::size_t b = bit_; b < in_.size() * 8; ++b) {
      if ((in_[b / 8] >> (7 - b % 8)) & 1u) return false;
    }
    return true;
  }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t bit_ = 0;
};

struct HeaderFields {
  std::uint8_t flags = 0;
  std::uint32_t sample_rate_hz = 0;
  std::uint16_t window_len = 0;
  std::uint16_t token_len = 0;
  std::uint16_t total_tokens = 0;
  std::uint16_t kept_count = 0;
  float delta0 = 0.0f;
  float alpha = 0.0f;
  std::uint8_t fine_bits = 0;
  std::uint8_t coarse_bits = 0;
};

/// Reads and validates the fixed-size header.
inline void read_header(std::span<const std::uint8_t> bytes, HeaderFields& h) {
  const std::size_t magic_len = std::min(bytes.size(), kFrameMagic.size());
  if (magic_len > 0 && std::memcmp(bytes.data(), kFrameMagic.data(), magic_len) != 0) {
    throw FrameError(FrameErrorKind::bad_magic, "");
  }
  if (bytes.size() < kFrameMagic.size() + 1) throw FrameError(FrameErrorKind::truncated, "header");
  if (bytes[4] != kFrameVersion) {
    throw FrameError(FrameErrorKind::unsupported_version, "version " + std::to_string(bytes[4]));
  }
  if (bytes.size() < kFrameHeaderBytes) throw FrameError(FrameErrorKind::truncated, "header");

  ByteReader r(bytes);
  r.skip(5);
  h.flags = r.u8();
  h.sample_rate_hz = r.u32();
  h.window_len = r.u16();
  h.token_len = r.u16();
  h.total_tokens = r.u16();
  h.kept_count = r.u16();
  h.delta0 = r.f32();
  h.alpha = r.f32();
  h.fine_bits = r.u8();
  h.coarse_bits = r.u8();

  if (h.kept_count > h.total_tokens) {
    throw FrameError(FrameErrorKind::kept_exceeds_total,
                     std::to_string(h.kept_count) + " > " + std::to_string(h.total_tokens));
  }
  auto bad = [](const char* m) { throw FrameError(FrameErrorKind::invalid_header, m); };
  if (h.sample_rate_hz == 0) bad("zero sample rate");
  if (h.token_len == 0 || h.total_tokens == 0) bad("zero token length or count");
  if (static_cast<std::size_t>(h.token_len) * h.total_tokens != h.window_len) bad("window_len != token_len * total_tokens");
  if (h.fine_bits < kMinCodeBits || h.fine_bits > kMaxCodeBits || h.coarse_bits < kMinCodeBits ||
      h.coarse_bits > kMaxCodeBits || h.fine_bits < h.coarse_bits) {
    bad("bit widths");
  }
  if (!(h.delta0 > 0.0f) || !std::isfinite(h.delta0)) bad("delta0");
  if (!(h.alpha >= 0.0f) || !std::isfinite(h.alpha)) bad("alpha");
}

inline std::size_t bitmap_bytes(std::size_t window_len) { return (window_len + 7) / 8; }

}  // namespace detail

inline std::vector<std::uint8_t> pack_frame(const EncodedFrame& frame) {
  frame.validate();
  detail::ByteWriter w;
  w.bytes(kFrameMagic);
  w.u8(kFrameVersion);
  w.u8(frame.flags);
  w.u32(frame.sample_rate_hz);
  w.u16(frame.window_len);
  w.u16(frame.token_len);
  w.u16(frame.total_tokens);
  w.u16(static_cast<std::uint16_t>(frame.kept_count()));
  w.f32(frame.delta0);
  w.f32(frame.alpha);
  w.u8(frame.fine_bits);
  w.u8(frame.coarse_bits);

  std::vector<std::uint8_t> bitmap(detail::bitmap_bytes(frame.window_len), 0);
  for (std::size_t i = 0; i < frame.band_bitmap.size(); ++i) {
    if (frame.band_bitmap[i]) bitmap[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  w.bytes(bitmap);
  for (auto idx : frame.kept_indices) w.u16(idx);

  detail::BitWriter bits;
  for (std::size_t t = 0; t < frame.kept_count(); ++t) {
    const std::size_t base = static_cast<std::size_t>(frame.kept_indices[t]) * frame.token_len;
    for (std::size_t m = 0; m < frame.token_len; ++m) bits.put(frame.codes[t * frame.token_len + m], frame.width_of(base + m));
  }
  w.bytes(bits.bytes());
  w.u32(crc32_of(w.buffer()));
  return std::move(w.buffer());
}

struct ParsedFrame {
  EncodedFrame frame;
  std::size_t consumed = 0;
};

/// Parses one frame from the front of `bytes`; trailing bytes are left alone.
inline ParsedFrame parse_frame_prefix(std::span<const std::uint8_t> bytes) {
  detail::HeaderFields h;
  detail::read_header(bytes, h);

  const std::size_t bitmap_len = detail::bitmap_bytes(h.window_len);
  const std::size_t index_off = kFrameHeaderBytes + bitmap_len;
  const std::size_t payload_off = index_off + 2 * static_cast<std::size_t>(h.kept_count);
  if (bytes.size() < payload_off) throw FrameError(FrameErrorKind::truncated, "bitmap/indices");

  EncodedFrame f;
  f.flags = h.flags;
  f.sample_rate_hz = h.sample_rate_hz;
  f.window_len = h.window_len;
  f.token_len = h.token_len;
  f.total_tokens = h.total_tokens;
  f.delta0 = h.delta0;
  f.alpha = h.alpha;
  f.fine_bits = h.fine_bits;
  f.coarse_bits = h.coarse_bits;
  f.band_bitmap.resize(h.window_len);
  for (std::size_t i = 0; i < h.window_len; ++i) {
    f.band_bitmap[i] = ((bytes[kFrameHeaderBytes + i / 8] >> (i % 8)) & 1u) != 0;
  }

  // Index values are only trusted after the CRC, but the payload length needs
  // them; out-of-range indices are clamped for sizing and rejected below.
  detail::ByteReader ir(bytes.subspan(index_off));
  std::vector<std::uint16_t> indices(h.kept_count);
  std::size_t payload_bits = 0;
  for (std::size_t t = 0; t < h.kept_count; ++t) {
    indices[t] = ir.u16();
    if (indices[t] < h.total_tokens) {
      const std::size_t base = static_cast<std::size_t>(indices[t]) * h.token_len;
      for (std::size_t m = 0; m < h.token_len; ++m) payload_bits += static_cast<std::size_t>(f.width_of(base + m));
    } else {
      payload_bits += static_cast<std::size_t>(h.token_len) * h.fine_bits;
    }
  }
  const std::size_t payload_len = (payload_bits + 7) / 8;
  const std::size_t total = payload_off + payload_len + kFrameCrcBytes;
  if (bytes.size() < total) throw FrameError(FrameErrorKind::truncated, "payload/crc");

  detail::ByteReader cr(bytes.subspan(total - kFrameCrcBytes));
  const std::uint32_t stored = cr.u32();
  if (stored != crc32_of(bytes.first(total - kFrameCrcBytes))) throw FrameError(FrameErrorKind::crc_mismatch, "");

  for (std::size_t t = 0; t < indices.size(); ++t) {
    if (indices[t] >= h.total_tokens) throw FrameError(FrameErrorKind::index_out_of_range, std::to_string(indices[t]));
    if (t > 0 && indices[t] <= indices[t - 1]) throw FrameError(FrameErrorKind::indices_not_ascending, "");
  }
  f.kept_indices = std::move(indices);

  detail::BitReader br(bytes.subspan(payload_off, payload_len));
  f.codes.reserve(f.kept_indices.size() * f.token_len);
  for (auto idx : f.kept_indices) {
    const std::size_t base = static_cast<std::size_t>(idx) * f.token_len;
    for (std::size_t m = 0; m < f.token_len; ++m) f.codes.push_back(br.get(f.width_of(base + m)));
  }
  if (!br.padding_is_zero()) throw FrameError(FrameErrorKind::invalid_padding, "");

  return ParsedFrame{std::move(f), total};
}

/// Parses exactly one frame; any bytes after it are an error.
inline EncodedFrame parse_frame(std::span<const std::uint8_t> bytes) {
  auto parsed = parse_frame_prefix(bytes);
  if (parsed.consumed != bytes.size()) {
    throw FrameError(FrameErrorKind::trailing_data, std::to_string(bytes.size() - parsed.consumed) + " bytes");
  }
  return std::move(parsed.frame);
}

}  // namespace vibcodec
