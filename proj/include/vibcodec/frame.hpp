#pragma once

// The compressed representation of one window, shared by the encoder, the
// decoder, the wire format and the baselines.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace vibcodec {

/// Codec family tag carried in bits 1..3 of the frame flags byte.
enum class CodecFamily : std::uint8_t { epicmt = 0, dct_topk = 1, pca = 2, cs_random = 3 };

inline constexpr std::uint8_t kFlagRefineHint = 0x01;
inline constexpr int kFamilyShift = 1;
inline constexpr std::uint8_t kFamilyMask = 0x0E;

inline constexpr int kMinCodeBits = 2;
inline constexpr int kMaxCodeBits = 16;

constexpr std::int32_t code_min(int bits) { return -(std::int32_t{1} << (bits - 1)); }
constexpr std::int32_t code_max(int bits) { return (std::int32_t{1} << (bits - 1)) - 1; }

struct EncodedFrame {
  std::uint8_t flags = 0;
  std::uint32_t sample_rate_hz = 0;
  std::uint16_t window_len = 0;
  std::uint16_t token_len = 0;
  std::uint16_t total_tokens = 0;
  float delta0 = 1.0f;
  float alpha = 0.0f;
  std::uint8_t fine_bits = 8;
  std::uint8_t coarse_bits = 4;
  std::vector<bool> band_bitmap;              // one bit per coefficient, true = protected
  std::vector<std::uint16_t> kept_indices;    // strictly ascending token indices
  std::vector<std::int32_t> codes;            // kept_count * token_len, token-major

  std::size_t kept_count() const { return kept_indices.size(); }

  CodecFamily family() const { return static_cast<CodecFamily>((flags & kFamilyMask) >> kFamilyShift); }
  void set_family(CodecFamily f) {
    flags = static_cast<std::uint8_t>((flags & ~kFamilyMask) | (static_cast<std::uint8_t>(f) << kFamilyShift));
  }
  bool refinement_hint() const { return (flags & kFlagRefineHint) != 0; }

  /// Bit width of coefficient `coef` (absolute index into the window).
  int width_of(std::size_t coef) const { return band_bitmap[coef] ? fine_bits : coarse_bits; }

  /// Dequantization step for a coefficient: delta0 / (1 + alpha) inside
  /// protected bands, delta0 elsewhere. Uses the exact header values.
  double step_of(std::size_t coef) const {
    const double d0 = static_cast<double>(delta0);
    return band_bitmap[coef] ? d0 / (1.0 + static_cast<double>(alpha)) : d0;
  }

  bool operator==(const EncodedFrame&) const = default;

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const {
    auto fail = [](const std::string& m) { throw std::invalid_argument("EncodedFrame: " + m); };
    if (sample_rate_hz == 0) fail("sample rate must be positive");
    if (token_len == 0 || total_tokens == 0) fail("token length and token count must be positive");
    if (static_cast<std::size_t>(token_len) * total_tokens != window_len) fail("window_len != token_len * total_tokens");
    if (fine_bits < kMinCodeBits || fine_bits > kMaxCodeBits || coarse_bits < kMinCodeBits || coarse_bits > kMaxCodeBits) {
      fail("bit widths must lie in [2,16]");
    }
    if (fine_bits < coarse_bits) fail("fine_bits must be >= coarse_bits");
    if (!(delta0 > 0.0f) || !std::isfinite(delta0)) fail("delta0 must be positive and finite");
    if (!(alpha >= 0.0f) || !std::isfinite(alpha)) fail("alpha must be nonnegative and finite");
    if (band_bitmap.size() != window_len) fail("band bitmap length must equal window_len");
    if (kept_indices.size() > total_tokens) fail("kept_count exceeds total_tokens");
    for (std::size_t i = 0; i < kept_indices.size(); ++i) {
      if (kept_indices[i] >= total_tokens) fail("kept index out of range");
      if (i > 0 && kept_indices[i] <= kept_indices[i - 1]) fail("kept indices must be strictly ascending");
    }
    if (codes.size() != kept_indices.size() * token_len) fail("code count must equal kept_count * token_len");
    for (std::size_t t = 0; t < kept_indices.size(); ++t) {
      for (std::size_t m = 0; m < token_len; ++m) {
        const std::size_t coef = static_cast<std::size_t>(kept_indices[t]) * token_len + m;
        const int w = width_of(coef);
        const auto c = codes[t * token_len + m];
        if (c < code_min(w) || c > code_max(w)) fail("code outside the signed range of its width");
      }
    }
  }
};

/// Payload bits: the sum of per-coefficient widths over every kept token.
inline std::uint64_t frame_bits(const EncodedFrame& frame) {
  std::uint64_t bits = 0;
  for (auto token : frame.kept_indices) {
    const std::size_t base = static_cast<std::size_t>(token) * frame.token_len;
    for (std::size_t m = 0; m < frame.token_len; ++m) bits += static_cast<std::uint64_t>(frame.width_of(base + m));
  }
  return bits;
}

/// Index side information (one u16 per kept token).
inline std::uint64_t side_info_bits(const EncodedFrame& frame) { return 16u * frame.kept_count(); }

}  // namespace vibcodec
