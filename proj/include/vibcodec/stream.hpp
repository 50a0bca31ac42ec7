#pragma once

// Stream-level codec path: 50%-overlap sqrt-Hann analysis, per-window
// encode, frame-stream parsing with resynchronisation, overlap-add
// synthesis and stream refinement.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vibcodec/data.hpp"
#include "vibcodec/decoder.hpp"
#include "vibcodec/encoder.hpp"
#include "vibcodec/wire.hpp"

namespace vibcodec {

/// Samples [begin, end) of a reconstructed stream covered by two windows.
/// The first and last half window are warm-up and excluded from metrics.
struct InteriorRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end > begin ? end - begin : 0; }
};

inline InteriorRange stream_interior(std::size_t stream_len, std::size_t window_len) {
  const std::size_t half = window_len / 2;
  if (stream_len <= 2 * half) return {0, 0};
  return {half, stream_len - half};
}

/// Length of the overlap-added reconstruction of `frame_count` windows.
inline std::size_t stream_length(std::size_t frame_count, std::size_t window_len) {
  return frame_count == 0 ? 0 : (frame_count - 1) * (window_len / 2) + window_len;
}

/// Segments at hop N/2, applies the analysis taper, and encodes each window.
inline std::vector<EncodedFrame> encode_stream(std::span<const double> signal, double sample_rate_hz,
                                               std::size_t window_len, const BandClassification& classification,
                                               const EncodeConfig& cfg) {
  std::vector<EncodedFrame> frames;
  for (const auto& w : segment(signal, sample_rate_hz, window_len, window_len / 2)) {
    frames.push_back(encode(analysis_taper(w), classification, cfg));
  }
  return frames;
}

/// A parsed frame stream. Missing entries mark corrupted frames, which decode
/// as silence so later frames keep their positions.
struct FrameStream {
  std::vector<std::optional<EncodedFrame>> frames;
  std::size_t corrupted = 0;
  std::vector<std::string> warnings;
};

inline std::vector<std::uint8_t> pack_stream(std::span<const EncodedFrame> frames) {
  std::vector<std::uint8_t> out;
  for (const auto& f : frames) {
    const auto b = pack_frame(f);
    out.insert(out.end(), b.begin(), b.end());
  }
  return out;
}

/// Parses concatenated frames. After a damaged frame the reader resumes at
/// the next occurrence of the magic.
inline FrameStream read_frame_stream(std::span<const std::uint8_t> bytes) {
  FrameStream s;
  std::size_t pos = 0;
  auto find_magic = [&](std::size_t from) {
    for (std::size_t i = from; i + kFrameMagic.size() <= bytes.size(); ++i) {
      if (std::equal(kFrameMagic.begin(), kFrameMagic.end(), bytes.begin() + static_cast<std::ptrdiff_t>(i))) return i;
    }
    return bytes.size();
  };
  while (pos < bytes.size()) {
    try {
      auto parsed = parse_frame_prefix(bytes.subspan(pos));
      s.frames.emplace_back(std::move(parsed.frame));
      pos += parsed.consumed;
    } catch (const FrameError& e) {
      s.warnings.push_back("frame at byte " + std::to_string(pos) + ": " + e.what());
      ++s.corrupted;
      s.frames.emplace_back(std::nullopt);
      pos = find_magic(pos + 1);
    }
  }
  return s;
}

/// Decodes each frame (silence for corrupted entries) and overlap-adds.
inline std::vector<double> decode_stream(const FrameStream& stream) {
  std::size_t n = 0;
  for (const auto& f : stream.frames) {
    if (f) {
      n = f->window_len;
      break;
    }
  }
  if (n == 0) return {};
  std::vector<SignalWindow> windows;
  windows.reserve(stream.frames.size());
  for (const auto& f : stream.frames) {
    if (f) {
      if (f->window_len != n) throw std::invalid_argument("decode_stream: frames disagree on window length");
      windows.push_back(synthesize(*f));
    } else {
      windows.push_back(SignalWindow{std::vector<double>(n, 0.0), 0.0, 0});
    }
  }
  return overlap_add(windows, n / 2);
}

/// Stream form of the physics-projection refinement: each step pulls the
/// protected coefficients of every analysis-tapered window toward its frame's
/// decoded values and overlap-adds the corrections.
inline std::vector<double> refine_stream(std::span<const double> stream, const FrameStream& frames,
                                         const RefineConfig& cfg) {
  cfg.validate();
  std::vector<double> x(stream.begin(), stream.end());
  if (cfg.k_steps == 0 || cfg.alpha_mix == 0.0) return x;

  std::vector<std::optional<ProtectedTargets>> targets;
  std::size_t n = 0;
  for (const auto& f : frames.frames) {
    if (f) {
      targets.emplace_back(protected_targets(*f));
      n = f->window_len;
    } else {
      targets.emplace_back(std::nullopt);
    }
  }
  if (n == 0) return x;
  const std::size_t hop = n / 2;
  const auto taper = sqrt_hann(n);
  std::vector<double> seg(n);
  std::vector<double> correction(x.size());
  for (std::size_t k = 0; k < cfg.k_steps; ++k) {
    std::fill(correction.begin(), correction.end(), 0.0);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const std::size_t start = i * hop;
      if (!targets[i] || start + n > x.size()) continue;
      for (std::size_t j = 0; j < n; ++j) seg[j] = x[start + j] * taper[j];
      auto c = dct2(seg);
      bool any = false;
      for (std::size_t b = 0; b < n; ++b) {
        if (targets[i]->mask[b]) {
          c[b] = targets[i]->values[b] - c[b];
          any = true;
        } else {
          c[b] = 0.0;
        }
      }
      if (!any) continue;
      const auto delta = idct2(c);
      for (std::size_t j = 0; j < n; ++j) correction[start + j] += taper[j] * delta[j];
    }
    const double gain = cfg.eta[k] * cfg.alpha_mix;
    for (std::size_t j = 0; j < x.size(); ++j) x[j] += gain * correction[j];
  }
  return x;
}

}  // namespace vibcodec
