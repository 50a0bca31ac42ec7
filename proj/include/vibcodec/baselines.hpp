#pragma once

// Reference codecs and ablations. Every variant emits an EncodedFrame so the
// comparison runs on the same wire format and the same bit accounting.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vibcodec/decoder.hpp"
#include "vibcodec/dsp.hpp"
#include "vibcodec/encoder.hpp"
#include "vibcodec/frame.hpp"

namespace vibcodec {

namespace detail {

/// Single-coefficient tokens, uniform q-bit codes with the step chosen so the
/// largest kept magnitude lands exactly on the top code.
inline EncodedFrame coefficient_frame(const SignalWindow& window, const std::vector<double>& c,
                                      std::vector<std::size_t> kept, int q, CodecFamily family) {
  if (q < kMinCodeBits || q > kMaxCodeBits) throw std::invalid_argument("baseline: bit width must lie in [2,16]");
  const std::size_t n = c.size();
  if (n > 0xFFFF) throw std::invalid_argument("baseline: window too long for the frame format");
  std::sort(kept.begin(), kept.end());
  double peak = 0.0;
  for (auto i : kept) peak = std::max(peak, std::abs(c[i]));
  EncodedFrame f;
  f.sample_rate_hz = static_cast<std::uint32_t>(std::round(window.sample_rate_hz));
  f.window_len = static_cast<std::uint16_t>(n);
  f.token_len = 1;
  f.total_tokens = static_cast<std::uint16_t>(n);
  f.alpha = 0.0f;
  f.fine_bits = f.coarse_bits = static_cast<std::uint8_t>(q);
  f.delta0 = to_header_float(peak > 0.0 ? peak / static_cast<double>(code_max(q)) : 1.0);
  f.set_family(family);
  f.band_bitmap.assign(n, false);
  const double step = static_cast<double>(f.delta0);
  for (auto i : kept) {
    f.kept_indices.push_back(static_cast<std::uint16_t>(i));
    f.codes.push_back(quantize_value(c[i], step, q));
  }
  return f;
}

inline void check_keep_count(std::size_t k, std::size_t n) {
  if (k < 1 || k > n) {
    throw std::invalid_argument("baseline: keep count " + std::to_string(k) + " must lie in [1, " + std::to_string(n) + "]");
  }
}

}  // namespace detail

/// Keeps the k largest-magnitude DCT coefficients (ties toward the lower
/// index) with uniform q-bit codes. Payload k*q bits plus 16k index bits.
inline EncodedFrame dct_topk_encode(const SignalWindow& window, std::size_t k, int q) {
  window.validate();
  detail::check_keep_count(k, window.size());
  const auto c = dct2(std::span<const double>(window.samples));
  std::vector<std::size_t> order(c.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::abs(c[a]) > std::abs(c[b]); });
  order.resize(k);
  return detail::coefficient_frame(window, c, std::move(order), q, CodecFamily::dct_topk);
}

/// Compressed-sensing stand-in: k DCT coefficients chosen by a seeded random
/// draw instead of by magnitude, decoded by plain inverse DCT.
inline EncodedFrame cs_random_encode(const SignalWindow& window, std::size_t k, int q, std::uint64_t seed) {
  window.validate();
  detail::check_keep_count(k, window.size());
  const auto c = dct2(std::span<const double>(window.samples));
  return detail::coefficient_frame(window, c, detail::random_subset(c.size(), k, seed), q, CodecFamily::cs_random);
}

/// Full pipeline with the harmonic-aware quantizer replaced by a uniform one:
/// alpha = 0 and fine_bits everywhere.
inline EncodedFrame ablation_no_hpq(const SignalWindow& window, const BandClassification& classification,
                                    EncodeConfig cfg) {
  cfg.alpha = 0.0;
  cfg.coarse_bits = cfg.fine_bits;
  return encode(window, classification, cfg);
}

/// Full pipeline with score-based selection replaced by lowest-frequency-first
/// or seeded-random selection of the same number of tokens.
inline EncodedFrame ablation_no_sats(const SignalWindow& window, const BandClassification& classification,
                                     EncodeConfig cfg, SelectionMode mode, std::uint64_t seed = 0) {
  if (mode == SelectionMode::sats) throw std::invalid_argument("ablation_no_sats: mode must replace score-based selection");
  cfg.selection = mode;
  cfg.selection_seed = seed;
  return encode(window, classification, cfg);
}

// ---------------------------------------------------------------------------
// PCA

/// Mean-centred projection onto the top principal directions of a training
/// set. Immutable after construction.
class PcaCodec {
 public:
  static constexpr int kScoreBits = 16;

  /// Fits r components. Throws if there are fewer than r windows, the windows
  /// disagree on length, or r exceeds the numerical rank of the centred data.
  PcaCodec(std::span<const SignalWindow> train, std::size_t r) : components_(r) {
    if (train.empty()) throw std::invalid_argument("PcaCodec: empty training set");
    if (train.size() < r) throw std::invalid_argument("PcaCodec: fewer training windows than components");
    n_ = train.front().size();
    if (n_ == 0 || n_ > 0xFFFF) throw std::invalid_argument("PcaCodec: unsupported window length");
    Eigen::MatrixXd x(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (train[i].size() != n_) throw std::invalid_argument("PcaCodec: training windows differ in length");
      require_finite(train[i].samples, "PcaCodec");
      for (std::size_t j = 0; j < n_; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = train[i].samples[j];
    }
    mean_ = x.colwise().mean().transpose();
    x.rowwise() -= mean_.transpose();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double tol = sv.size() > 0 ? static_cast<double>(std::max(x.rows(), x.cols())) *
                                           std::numeric_limits<double>::epsilon() * sv(0)
                                     : 0.0;
    rank_ = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > tol) ++rank_;
    }
    if (r > rank_) {
      throw std::invalid_argument("PcaCodec: " + std::to_string(r) + " components exceed the training rank " +
                                  std::to_string(rank_));
    }
    basis_ = svd.matrixV().leftCols(static_cast<Eigen::Index>(r));
  }

  std::size_t components() const { return components_; }
  std::size_t window_len() const { return n_; }
  std::size_t training_rank() const { return rank_; }

  /// Unquantized projection scores.
  std::vector<double> project(std::span<const double> x) const {
    check_len(x.size());
    Eigen::VectorXd v(static_cast<Eigen::Index>(n_));
    for (std::size_t j = 0; j < n_; ++j) v(static_cast<Eigen::Index>(j)) = x[j] - mean_(static_cast<Eigen::Index>(j));
    const Eigen::VectorXd s = basis_.transpose() * v;
    return {s.data(), s.data() + s.size()};
  }

  std::vector<double> reconstruct(std::span<const double> scores) const {
    if (scores.size() != components_) throw std::invalid_argument("PcaCodec: score count mismatch");
    Eigen::VectorXd y = mean_;
    for (std::size_t i = 0; i < components_; ++i) y += scores[i] * basis_.col(static_cast<Eigen::Index>(i));
    return {y.data(), y.data() + y.size()};
  }

  /// Scores quantized to 16-bit codes with a per-frame step. The frame uses
  /// one slot per component in the coefficient index space.
  EncodedFrame encode(const SignalWindow& window) const {
    window.validate();
    const auto s = project(window.samples);
    double peak = 0.0;
    for (double v : s) peak = std::max(peak, std::abs(v));
    EncodedFrame f;
    f.sample_rate_hz = static_cast<std::uint32_t>(std::round(window.sample_rate_hz));
    f.window_len = static_cast<std::uint16_t>(n_);
    f.token_len = 1;
    f.total_tokens = static_cast<std::uint16_t>(n_);
    f.alpha = 0.0f;
    f.fine_bits = f.coarse_bits = static_cast<std::uint8_t>(kScoreBits);
    f.delta0 = detail::to_header_float(peak > 0.0 ? peak / static_cast<double>(code_max(kScoreBits)) : 1.0);
    f.set_family(CodecFamily::pca);
    f.band_bitmap.assign(n_, false);
    for (std::size_t i = 0; i < components_; ++i) {
      f.kept_indices.push_back(static_cast<std::uint16_t>(i));
      f.codes.push_back(quantize_value(s[i], static_cast<double>(f.delta0), kScoreBits));
    }
    return f;
  }

  SignalWindow decode(const EncodedFrame& frame) const {
    frame.validate();
    if (frame.family() != CodecFamily::pca) throw std::invalid_argument("PcaCodec: not a PCA frame");
    if (frame.window_len != n_ || frame.kept_count() != components_) {
      throw std::invalid_argument("PcaCodec: frame does not match the fitted codec");
    }
    std::vector<double> scores(components_);
    for (std::size_t i = 0; i < components_; ++i) scores[i] = static_cast<double>(frame.delta0) * frame.codes[i];
    return SignalWindow{reconstruct(scores), static_cast<double>(frame.sample_rate_hz), 0};
  }

 private:
  void check_len(std::size_t len) const {
    if (len != n_) throw std::invalid_argument("PcaCodec: window length does not match the fitted codec");
  }

  std::size_t components_ = 0;
  std::size_t n_ = 0;
  std::size_t rank_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd basis_;
};

}  // namespace vibcodec
