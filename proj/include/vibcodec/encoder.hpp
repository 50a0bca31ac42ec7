#pragma once

// Edge-side compression. A window's DCT spectrum is cut into contiguous
// frequency tokens, each token is scored, the top N/R tokens are kept, the
// survivors are quantized with a finer step inside protected harmonic bands,
// and the result is trimmed to fit an optional payload budget.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vibcodec/dsp.hpp"
#include "vibcodec/frame.hpp"
#include "vibcodec/harmonic.hpp"

namespace vibcodec {

/// Raised when a payload budget cannot hold even one all-coarse token.
class BudgetInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuantParams {
  double delta0 = 1.0;
  double alpha = 3.0;
  int fine_bits = 8;
  int coarse_bits = 4;

  void validate() const {
    if (!(delta0 > 0.0) || !std::isfinite(delta0)) throw std::invalid_argument("QuantParams: delta0 must be positive");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("QuantParams: alpha must be nonnegative");
    if (fine_bits < kMinCodeBits || fine_bits > kMaxCodeBits || coarse_bits < kMinCodeBits || coarse_bits > kMaxCodeBits) {
      throw std::invalid_argument("QuantParams: bit widths must lie in [2,16]");
    }
    if (fine_bits < coarse_bits) throw std::invalid_argument("QuantParams: fine_bits must be >= coarse_bits");
  }

  double step(bool is_protected) const { return is_protected ? delta0 / (1.0 + alpha) : delta0; }
  int width(bool is_protected) const { return is_protected ? fine_bits : coarse_bits; }
};

inline constexpr std::size_t kTokenFeatureCount = 3;
using TokenFeatures = std::array<double, kTokenFeatureCount>;

struct ScorerWeights {
  std::vector<double> w{4.0, 0.5, -0.5};
  double b = -1.0;

  void validate() const {
    if (w.size() != kTokenFeatureCount) throw std::invalid_argument("ScorerWeights: expected 3 weights");
    for (double v : w) {
      if (!std::isfinite(v)) throw std::invalid_argument("ScorerWeights: weights must be finite");
    }
    if (!std::isfinite(b)) throw std::invalid_argument("ScorerWeights: bias must be finite");
  }
};

struct BitBudget {
  std::uint64_t b_max = 0;
};

struct Token {
  std::size_t index = 0;
  std::vector<double> coefficients;
  std::vector<bool> protected_mask;
};

/// Splits a spectrum into window_len / d contiguous tokens in ascending frequency.
inline std::vector<Token> tokenize(const Spectrum& spectrum, const BandClassification& classification,
                                   std::size_t token_len) {
  const std::size_t n = spectrum.size();
  if (token_len == 0 || n % token_len != 0) {
    throw std::invalid_argument("tokenize: token length " + std::to_string(token_len) +
                                " does not divide window length " + std::to_string(n));
  }
  if (classification.size() != n) throw std::invalid_argument("tokenize: classification length mismatch");
  std::vector<Token> tokens(n / token_len);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto& t = tokens[i];
    t.index = i;
    t.coefficients.assign(spectrum.coefficients.begin() + static_cast<std::ptrdiff_t>(i * token_len),
                          spectrum.coefficients.begin() + static_cast<std::ptrdiff_t>((i + 1) * token_len));
    t.protected_mask.assign(classification.protected_bins.begin() + static_cast<std::ptrdiff_t>(i * token_len),
                            classification.protected_bins.begin() + static_cast<std::ptrdiff_t>((i + 1) * token_len));
  }
  return tokens;
}

/// [protected energy fraction, log1p(energy), spectral flatness of |c| + 1e-12].
inline TokenFeatures token_features(const Token& token) {
  constexpr double kEps = 1e-12;
  double total = 0.0;
  double prot = 0.0;
  double log_sum = 0.0;
  double lin_sum = 0.0;
  for (std::size_t m = 0; m < token.coefficients.size(); ++m) {
    const double c = token.coefficients[m];
    total += c * c;
    if (token.protected_mask[m]) prot += c * c;
    const double a = std::abs(c) + kEps;
    log_sum += std::log(a);
    lin_sum += a;
  }
  const double d = static_cast<double>(token.coefficients.size());
  TokenFeatures f{};
  f[0] = total > 0.0 ? prot / total : 0.0;
  f[1] = std::log1p(total);
  f[2] = d > 0.0 ? std::exp(log_sum / d) / (lin_sum / d) : 1.0;
  return f;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double score_features(const TokenFeatures& f, const ScorerWeights& weights) {
  double z = weights.b;
  for (std::size_t j = 0; j < kTokenFeatureCount; ++j) z += weights.w[j] * f[j];
  return sigmoid(z);
}

inline std::vector<double> score_tokens(std::span<const Token> tokens, const ScorerWeights& weights) {
  weights.validate();
  std::vector<double> s(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) s[i] = score_features(token_features(tokens[i]), weights);
  return s;
}

/// max(1, round(N / R)) tokens.
inline std::size_t kept_token_count(std::size_t n_tokens, double compression_ratio) {
  if (!(compression_ratio >= 1.0) || !std::isfinite(compression_ratio)) {
    throw std::invalid_argument("compression ratio must be >= 1");
  }
  const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n_tokens) / compression_ratio));
  return std::min(n_tokens, std::max<std::size_t>(1, k));
}

/// Hard top-K gate: the K highest scores (ties toward the lower index), ascending.
inline std::vector<std::size_t> select_tokens(std::span<const double> scores, double compression_ratio) {
  const std::size_t k = kept_token_count(scores.size(), compression_ratio);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(std::min(k, order.size()));
  std::sort(order.begin(), order.end());
  return order;
}

struct QuantizedToken {
  std::vector<std::int32_t> codes;
  std::vector<int> widths;
  std::size_t saturated = 0;
};

/// code = round(x / step), half away from zero, saturated to the signed range
/// of the coefficient's width.
inline std::int32_t quantize_value(double x, double step, int bits, bool* saturated = nullptr) {
  const double q = std::round(x / step);
  const auto lo = static_cast<double>(code_min(bits));
  const auto hi = static_cast<double>(code_max(bits));
  if (q < lo || q > hi) {
    if (saturated != nullptr) *saturated = true;
    return static_cast<std::int32_t>(q < lo ? lo : hi);
  }
  return static_cast<std::int32_t>(q);
}

inline QuantizedToken quantize_hp(const Token& token, const QuantParams& params) {
  params.validate();
  QuantizedToken out;
  out.codes.reserve(token.coefficients.size());
  out.widths.reserve(token.coefficients.size());
  for (std::size_t m = 0; m < token.coefficients.size(); ++m) {
    const bool p = token.protected_mask[m];
    bool sat = false;
    out.codes.push_back(quantize_value(token.coefficients[m], params.step(p), params.width(p), &sat));
    out.widths.push_back(params.width(p));
    if (sat) ++out.saturated;
  }
  return out;
}

/// Token selection rule; the two non-adaptive modes exist for the ablations.
enum class SelectionMode { sats, lowest_frequency, seeded_random };

struct EncodeConfig {
  std::size_t token_len = 8;
  double compression_ratio = 4.0;
  /// Unset: the smallest step that keeps every kept coefficient in range.
  std::optional<double> delta0;
  double alpha = 3.0;
  int fine_bits = 8;
  int coarse_bits = 4;
  ScorerWeights weights;
  std::optional<BitBudget> budget;
  SelectionMode selection = SelectionMode::sats;
  std::uint64_t selection_seed = 0;
  bool refinement_hint = false;
};

struct EncodeStats {
  std::vector<double> scores;
  std::size_t selected_before_budget = 0;
  std::size_t saturated = 0;
};

struct EncodeResult {
  EncodedFrame frame;
  EncodeStats stats;
};

namespace detail {

inline std::uint64_t token_bits(const Token& t, int fine, int coarse) {
  std::uint64_t bits = 0;
  for (bool p : t.protected_mask) bits += static_cast<std::uint64_t>(p ? fine : coarse);
  return bits;
}

inline std::vector<std::size_t> random_subset(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k && i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(std::min(k, n));
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Rounds up to the next float so the header value never shrinks the step.
inline float to_header_float(double v) {
  auto f = static_cast<float>(v);
  if (static_cast<double>(f) < v) f = std::nextafter(f, std::numeric_limits<float>::infinity());
  return f;
}

}  // namespace detail

/// Smallest base step for which no kept coefficient saturates: protected
/// coefficients need |c| (1 + alpha) / qmax(fine), background |c| / qmax(coarse).
inline double fit_delta0(std::span<const Token> kept, double alpha, int fine_bits, int coarse_bits) {
  double d = 0.0;
  const auto fine_max = static_cast<double>(code_max(fine_bits));
  const auto coarse_max = static_cast<double>(code_max(coarse_bits));
  for (const auto& t : kept) {
    for (std::size_t m = 0; m < t.coefficients.size(); ++m) {
      const double a = std::abs(t.coefficients[m]);
      d = std::max(d, t.protected_mask[m] ? a * (1.0 + alpha) / fine_max : a / coarse_max);
    }
  }
  return d > 0.0 ? d : 1.0;
}

inline EncodeResult encode_detailed(const SignalWindow& window, const BandClassification& classification,
                                    const EncodeConfig& cfg) {
  window.validate();
  cfg.weights.validate();
  const std::size_t n = window.size();
  if (classification.size() != n) throw std::invalid_argument("encode: classification length does not match window");
  if (n > 0xFFFF) throw std::invalid_argument("encode: window too long for the frame format");
  const double rate = std::round(window.sample_rate_hz);
  if (rate < 1.0 || rate > 4294967295.0) throw std::invalid_argument("encode: sample rate not representable");
  QuantParams probe{cfg.delta0.value_or(1.0), cfg.alpha, cfg.fine_bits, cfg.coarse_bits};
  probe.validate();

  const auto spectrum = dct2(window);
  const auto tokens = tokenize(spectrum, classification, cfg.token_len);

  EncodeResult result;
  auto& stats = result.stats;
  stats.scores = score_tokens(tokens, cfg.weights);

  const std::size_t k = kept_token_count(tokens.size(), cfg.compression_ratio);
  std::vector<std::size_t> kept;
  switch (cfg.selection) {
    case SelectionMode::sats:
      kept = select_tokens(stats.scores, cfg.compression_ratio);
      break;
    case SelectionMode::lowest_frequency:
      kept.resize(k);
      std::iota(kept.begin(), kept.end(), std::size_t{0});
      break;
    case SelectionMode::seeded_random:
      kept = detail::random_subset(tokens.size(), k, cfg.selection_seed);
      break;
  }
  stats.selected_before_budget = kept.size();

  if (cfg.budget) {
    const std::uint64_t b_max = cfg.budget->b_max;
    if (b_max < static_cast<std::uint64_t>(cfg.token_len) * static_cast<std::uint64_t>(cfg.coarse_bits)) {
      throw BudgetInfeasible("budget infeasible: " + std::to_string(b_max) + " bits cannot hold one " +
                             std::to_string(cfg.token_len) + "-coefficient coarse token");
    }
    std::uint64_t bits = 0;
    for (auto i : kept) bits += detail::token_bits(tokens[i], cfg.fine_bits, cfg.coarse_bits);
    // Drop order: lowest score first, ties toward the higher index.
    std::vector<std::size_t> drop_order(kept);
    std::stable_sort(drop_order.begin(), drop_order.end(), [&](std::size_t a, std::size_t b) {
      if (stats.scores[a] != stats.scores[b]) return stats.scores[a] < stats.scores[b];
      return a > b;
    });
    std::vector<bool> dropped(tokens.size(), false);
    for (std::size_t j = 0; j < drop_order.size() && bits > b_max; ++j) {
      dropped[drop_order[j]] = true;
      bits -= detail::token_bits(tokens[drop_order[j]], cfg.fine_bits, cfg.coarse_bits);
    }
    std::erase_if(kept, [&](std::size_t i) { return dropped[i]; });
  }

  std::vector<Token> kept_tokens;
  kept_tokens.reserve(kept.size());
  for (auto i : kept) kept_tokens.push_back(tokens[i]);

  auto& frame = result.frame;
  frame.sample_rate_hz = static_cast<std::uint32_t>(rate);
  frame.window_len = static_cast<std::uint16_t>(n);
  frame.token_len = static_cast<std::uint16_t>(cfg.token_len);
  frame.total_tokens = static_cast<std::uint16_t>(tokens.size());
  frame.alpha = static_cast<float>(cfg.alpha);
  const double delta0 =
      cfg.delta0 ? *cfg.delta0 : fit_delta0(kept_tokens, static_cast<double>(frame.alpha), cfg.fine_bits, cfg.coarse_bits);
  frame.delta0 = detail::to_header_float(delta0);
  if (!(frame.delta0 > 0.0f) || !std::isfinite(frame.delta0)) throw std::invalid_argument("encode: delta0 not representable as float");
  frame.fine_bits = static_cast<std::uint8_t>(cfg.fine_bits);
  frame.coarse_bits = static_cast<std::uint8_t>(cfg.coarse_bits);
  frame.flags = cfg.refinement_hint ? kFlagRefineHint : 0;
  frame.set_family(CodecFamily::epicmt);
  frame.band_bitmap = classification.protected_bins;

  // Quantize with the exact header values the decoder will see.
  const QuantParams header_params{static_cast<double>(frame.delta0), static_cast<double>(frame.alpha),
                                  cfg.fine_bits, cfg.coarse_bits};
  for (const auto& t : kept_tokens) {
    frame.kept_indices.push_back(static_cast<std::uint16_t>(t.index));
    auto q = quantize_hp(t, header_params);
    stats.saturated += q.saturated;
    frame.codes.insert(frame.codes.end(), q.codes.begin(), q.codes.end());
  }
  return result;
}

inline EncodedFrame encode(const SignalWindow& window, const BandClassification& classification,
                           const EncodeConfig& cfg) {
  return encode_detailed(window, classification, cfg).frame;
}

// ---------------------------------------------------------------------------
// Scorer training

struct LabeledTokenFeatures {
  TokenFeatures features{};
  int keep = 0;  // 0 or 1
};

/// Mean binary cross-entropy of the scorer on a labelled set.
inline double scorer_loss(const ScorerWeights& weights, std::span<const LabeledTokenFeatures> data) {
  double loss = 0.0;
  for (const auto& ex : data) {
    double z = weights.b;
    for (std::size_t j = 0; j < kTokenFeatureCount; ++j) z += weights.w[j] * ex.features[j];
    // log(1 + e^z) - y z, evaluated stably.
    const double softplus = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    loss += softplus - static_cast<double>(ex.keep) * z;
  }
  return data.empty() ? 0.0 : loss / static_cast<double>(data.size());
}

/// Full-batch gradient descent on the logistic loss.
inline ScorerWeights train_scorer(std::span<const LabeledTokenFeatures> data, std::size_t epochs,
                                  double learning_rate,
                                  ScorerWeights initial = ScorerWeights{{0.0, 0.0, 0.0}, 0.0}) {
  initial.validate();
  bool has_pos = false;
  bool has_neg = false;
  for (const auto& ex : data) {
    if (ex.keep != 0 && ex.keep != 1) throw std::invalid_argument("train_scorer: labels must be 0 or 1");
    (ex.keep == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw std::invalid_argument("train_scorer: need at least one example of each label");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train_scorer: learning rate must be positive");

  ScorerWeights w = initial;
  const double inv_n = 1.0 / static_cast<double>(data.size());
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::array<double, kTokenFeatureCount> grad{};
    double grad_b = 0.0;
    for (const auto& ex : data) {
      const double err = score_features(ex.features, w) - static_cast<double>(ex.keep);
      for (std::size_t j = 0; j < kTokenFeatureCount; ++j) grad[j] += err * ex.features[j];
      grad_b += err;
    }
    for (std::size_t j = 0; j < kTokenFeatureCount; ++j) w.w[j] -= learning_rate * grad[j] * inv_n;
    w.b -= learning_rate * grad_b * inv_n;
  }
  return w;
}

}  // namespace vibcodec
