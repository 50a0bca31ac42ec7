#pragma once

// Cloud-side reconstruction: dequantize a frame, synthesize its window,
// overlap-add windows into a stream, and refine toward the decoded
// protected-band coefficients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vibcodec/dsp.hpp"
#include "vibcodec/frame.hpp"
#include "vibcodec/harmonic.hpp"

namespace vibcodec {

struct RefineConfig {
  std::size_t k_steps = 4;
  std::vector<double> eta{0.5, 0.5, 0.5, 0.5};
  double alpha_mix = 1.0;

  static RefineConfig constant(std::size_t k, double eta_value = 0.5, double alpha_mix = 1.0) {
    return RefineConfig{k, std::vector<double>(k, eta_value), alpha_mix};
  }

  void validate() const {
    if (eta.size() != k_steps) throw std::invalid_argument("RefineConfig: eta must have k_steps entries");
    if (!(alpha_mix >= 0.0) || !std::isfinite(alpha_mix)) throw std::invalid_argument("RefineConfig: alpha_mix must be nonnegative");
    for (double e : eta) {
      if (!(e > 0.0 && e <= 1.0)) throw std::invalid_argument("RefineConfig: eta values must lie in (0,1]");
      if (alpha_mix * e > 1.0) throw std::invalid_argument("RefineConfig: alpha_mix * eta must not exceed 1");
    }
  }
};

/// Dequantized spectrum of a DCT-domain frame; dropped tokens are zero.
inline std::vector<double> dequantize(const EncodedFrame& frame) {
  frame.validate();
  if (frame.family() == CodecFamily::pca) throw std::invalid_argument("dequantize: PCA frames need the fitted PCA codec");
  std::vector<double> c(frame.window_len, 0.0);
  for (std::size_t t = 0; t < frame.kept_count(); ++t) {
    const std::size_t base = static_cast<std::size_t>(frame.kept_indices[t]) * frame.token_len;
    for (std::size_t m = 0; m < frame.token_len; ++m) {
      c[base + m] = frame.step_of(base + m) * frame.codes[t * frame.token_len + m];
    }
  }
  return c;
}

inline SignalWindow synthesize(const EncodedFrame& frame) {
  Spectrum s;
  s.coefficients = dequantize(frame);
  s.bin_spacing_hz = frame.sample_rate_hz / (2.0 * frame.window_len);
  return idct2(s, frame.window_len);
}

/// As above, after checking the frame was encoded against `classification`.
inline SignalWindow synthesize(const EncodedFrame& frame, const BandClassification& classification) {
  if (classification.size() != frame.window_len || classification.protected_bins != frame.band_bitmap) {
    throw std::invalid_argument("synthesize: frame header does not match the band classification");
  }
  return synthesize(frame);
}

/// Decoded protected-band coefficients the refinement pulls toward: protected
/// bins inside kept tokens.
struct ProtectedTargets {
  std::vector<bool> mask;
  std::vector<double> values;

  std::size_t size() const { return mask.size(); }
};

inline ProtectedTargets protected_targets(const EncodedFrame& frame) {
  ProtectedTargets t;
  t.values = dequantize(frame);
  t.mask.assign(frame.window_len, false);
  for (auto idx : frame.kept_indices) {
    const std::size_t base = static_cast<std::size_t>(idx) * frame.token_len;
    for (std::size_t m = 0; m < frame.token_len; ++m) t.mask[base + m] = frame.band_bitmap[base + m];
  }
  return t;
}

/// L2 distance between the masked DCT coefficients of `x` and the targets.
inline double protected_deviation(std::span<const double> x, const ProtectedTargets& targets) {
  const auto c = dct2(x);
  double s = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (targets.mask[k]) s += (c[k] - targets.values[k]) * (c[k] - targets.values[k]);
  }
  return std::sqrt(s);
}

/// K steps of x <- x + eta_k * alpha_mix * (p(x) - x), where p(x) has the
/// spectrum of x with the protected coefficients replaced by the targets.
inline std::vector<double> pc_refine(std::span<const double> xhat, const ProtectedTargets& targets,
                                     const RefineConfig& cfg) {
  cfg.validate();
  if (targets.size() != xhat.size() || targets.values.size() != xhat.size()) {
    throw std::invalid_argument("pc_refine: target length does not match the signal");
  }
  std::vector<double> x(xhat.begin(), xhat.end());
  if (cfg.k_steps == 0 || cfg.alpha_mix == 0.0) return x;
  for (std::size_t k = 0; k < cfg.k_steps; ++k) {
    auto c = dct2(x);
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (targets.mask[i]) c[i] = targets.values[i];
    }
    const auto p = idct2(c);
    const double gain = cfg.eta[k] * cfg.alpha_mix;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += gain * (p[i] - x[i]);
  }
  return x;
}

/// Analysis side of the sqrt-Hann pair.
inline SignalWindow analysis_taper(SignalWindow window) {
  const auto w = sqrt_hann(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) window.samples[i] *= w[i];
  return window;
}

/// Applies the synthesis sqrt-Hann taper to each window and sums them at
/// multiples of `hop` (which must be half the window length). Interior
/// samples of a stream whose windows were analysis-tapered are reproduced
/// exactly; the first and last half window are attenuated.
inline std::vector<double> overlap_add(std::span<const SignalWindow> windows, std::size_t hop) {
  if (windows.empty()) return {};
  const std::size_t n = windows.front().size();
  for (const auto& w : windows) {
    if (w.size() != n) throw std::invalid_argument("overlap_add: inconsistent window lengths");
  }
  if (n == 0 || n % 2 != 0 || hop != n / 2) throw std::invalid_argument("overlap_add: hop must be half the window length");
  const auto taper = sqrt_hann(n);
  std::vector<double> out((windows.size() - 1) * hop + n, 0.0);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const std::size_t start = i * hop;
    for (std::size_t j = 0; j < n; ++j) out[start + j] += taper[j] * windows[i].samples[j];
  }
  return out;
}

}  // namespace vibcodec
