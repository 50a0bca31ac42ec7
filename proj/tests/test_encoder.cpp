#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "test_util.hpp"
#include "vibcodec/decoder.hpp"
#include "vibcodec/encoder.hpp"
#include "vibcodec/metrics.hpp"

using namespace vibcodec;
using vibcodec::testing::default_classification;
using vibcodec::testing::gear_windows;

namespace {

Token make_token(std::vector<double> c, std::vector<bool> mask) {
  Token t;
  t.coefficients = std::move(c);
  t.protected_mask = std::move(mask);
  return t;
}

BandClassification all_background(std::size_t n) {
  BandClassification c;
  c.protected_bins.assign(n, false);
  return c;
}

}  // namespace

TEST(Tokenize, PartitionsSpectrum) {
  Spectrum s{vibcodec::testing::random_signal(1024, 1), 10.0};
  const auto tokens = tokenize(s, all_background(1024), 64);
  ASSERT_EQ(tokens.size(), 16u);
  std::vector<double> joined;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    EXPECT_EQ(tokens[i].index, i);
    EXPECT_EQ(tokens[i].coefficients.front(), s.coefficients[64 * i]);
    EXPECT_EQ(tokens[i].coefficients.back(), s.coefficients[64 * i + 63]);
    joined.insert(joined.end(), tokens[i].coefficients.begin(), tokens[i].coefficients.end());
  }
  EXPECT_EQ(joined, s.coefficients);
}

TEST(Tokenize, WholeWindowToken) {
  Spectrum s{vibcodec::testing::random_signal(256, 2), 10.0};
  const auto tokens = tokenize(s, all_background(256), 256);
  ASSERT_EQ(tokens.size(), 1u);
  EXPECT_EQ(tokens[0].coefficients, s.coefficients);
}

TEST(Tokenize, MasksFollowClassification) {
  const auto cls = default_classification();
  Spectrum s{std::vector<double>(1024, 1.0), 10.0};
  const auto tokens = tokenize(s, cls, 8);
  for (const auto& t : tokens) {
    for (std::size_t m = 0; m < 8; ++m) EXPECT_EQ(t.protected_mask[m], cls.protected_bins[t.index * 8 + m]);
  }
}

TEST(Tokenize, LengthMustDivideWindow) {
  Spectrum s{std::vector<double>(1024, 0.0), 10.0};
  EXPECT_THROW(tokenize(s, all_background(1024), 48), std::invalid_argument);
  EXPECT_THROW(tokenize(s, all_background(1024), 0), std::invalid_argument);
}

TEST(Features, FullyProtectedEnergy) {
  const auto f = token_features(make_token({1.0, -2.0, 0.5, 0.0}, {true, true, true, true}));
  EXPECT_DOUBLE_EQ(f[0], 1.0);
  EXPECT_NEAR(f[1], std::log1p(5.25), 1e-12);
}

TEST(Features, ZeroToken) {
  const auto f = token_features(make_token(std::vector<double>(8, 0.0), std::vector<bool>(8, true)));
  EXPECT_EQ(f[0], 0.0);
  EXPECT_EQ(f[1], 0.0);
  EXPECT_NEAR(f[2], 1.0, 1e-12);
}

TEST(Features, ProtectedFractionIsScaleInvariant) {
  const std::vector<bool> mask{true, false, true, false};
  const auto a = token_features(make_token({1.0, 2.0, 3.0, 4.0}, mask));
  const auto b = token_features(make_token({-50.0, -100.0, -150.0, -200.0}, mask));
  EXPECT_NEAR(a[0], b[0], 1e-12);
  EXPECT_NEAR(a[0], 10.0 / 30.0, 1e-12);
}

TEST(Features, FlatnessBounds) {
  const auto flat = token_features(make_token({2.0, -2.0, 2.0, -2.0}, std::vector<bool>(4, false)));
  const auto peaky = token_features(make_token({5.0, 0.0, 0.0, 0.0}, std::vector<bool>(4, false)));
  EXPECT_NEAR(flat[2], 1.0, 1e-9);
  EXPECT_LT(peaky[2], 0.01);
}

TEST(Scores, ZeroTokenWithDefaults) {
  const std::vector<Token> t{make_token(std::vector<double>(8, 0.0), std::vector<bool>(8, false))};
  const auto s = score_tokens(t, ScorerWeights{});
  EXPECT_NEAR(s[0], 1.0 / (1.0 + std::exp(1.5)), 1e-12);
  EXPECT_NEAR(s[0], 0.1824, 1e-4);
}

TEST(Scores, LoudProtectedTokenScoresHigh) {
  const std::vector<Token> t{make_token({10.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}, std::vector<bool>(8, true))};
  EXPECT_GT(score_tokens(t, ScorerWeights{})[0], 0.9);
}

TEST(Scores, MonotoneInProtectedFraction) {
  const ScorerWeights w;
  double prev = 0.0;
  for (double p = 0.0; p <= 1.0; p += 0.1) {
    const double s = score_features({p, 1.0, 0.5}, w);
    EXPECT_GT(s, prev);
    prev = s;
  }
}

TEST(Select, PaperTokenCount) {
  const std::vector<double> scores = vibcodec::testing::random_signal(128, 3);
  EXPECT_EQ(select_tokens(scores, 4.0).size(), 32u);
}

TEST(Select, TiesTowardLowerIndex) {
  const std::vector<double> scores(8, 0.5);
  EXPECT_EQ(select_tokens(scores, 2.0), (std::vector<std::size_t>{0, 1, 2, 3}));
}

TEST(Select, RatioOneKeepsEverything) {
  const auto scores = vibcodec::testing::random_signal(16, 4);
  EXPECT_EQ(select_tokens(scores, 1.0).size(), 16u);
}

TEST(Select, KeepsHighestAscending) {
  const std::vector<double> scores{0.1, 0.9, 0.3, 0.8, 0.2, 0.7};
  EXPECT_EQ(select_tokens(scores, 2.0), (std::vector<std::size_t>{1, 3, 5}));
}

TEST(Select, CardinalityGrid) {
  for (std::size_t n : {8u, 16u, 128u}) {
    for (double r : {1.0, 2.0, 4.0, 8.0, 16.0}) {
      const std::vector<double> scores(n, 0.3);
      const auto expect = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) / r)));
      EXPECT_EQ(select_tokens(scores, r).size(), expect) << n << " " << r;
    }
  }
  EXPECT_THROW(select_tokens(std::vector<double>(4, 0.0), 0.5), std::invalid_argument);
}

TEST(Quantize, ProtectedAndBackgroundArithmetic) {
  const QuantParams p{0.1, 3.0, 8, 4};
  const auto q = quantize_hp(make_token({0.137, 0.137}, {true, false}), p);
  EXPECT_EQ(q.codes, (std::vector<std::int32_t>{5, 1}));
  EXPECT_EQ(q.widths, (std::vector<int>{8, 4}));
  EXPECT_NEAR(0.025 * q.codes[0], 0.125, 1e-12);
  EXPECT_NEAR(0.1 * q.codes[1], 0.1, 1e-12);
}

TEST(Quantize, ZeroAndHalfwayRounding) {
  EXPECT_EQ(quantize_value(0.0, 0.37, 8), 0);
  EXPECT_EQ(quantize_value(2.5, 1.0, 8), 3);
  EXPECT_EQ(quantize_value(-2.5, 1.0, 8), -3);
  EXPECT_EQ(quantize_value(0.5, 1.0, 8), 1);
}

TEST(Quantize, SaturatesToSignedRange) {
  bool sat = false;
  EXPECT_EQ(quantize_value(100.0, 1.0, 4, &sat), 7);
  EXPECT_TRUE(sat);
  sat = false;
  EXPECT_EQ(quantize_value(-100.0, 1.0, 4, &sat), -8);
  EXPECT_TRUE(sat);
  sat = false;
  EXPECT_EQ(quantize_value(-7.6, 1.0, 4, &sat), -8);
  EXPECT_FALSE(sat);
}

TEST(Quantize, ErrorBoundedByHalfStep) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const QuantParams p{0.01, 3.0, 16, 12};
  for (int i = 0; i < 1000; ++i) {
    const bool prot = (i % 2) == 0;
    const double x = u(rng);
    const auto q = quantize_hp(make_token({x}, {prot}), p);
    ASSERT_EQ(q.saturated, 0u);
    EXPECT_LE(std::abs(x - p.step(prot) * q.codes[0]), p.step(prot) / 2.0 + 1e-15);
  }
}

TEST(Quantize, AlphaZeroIsUniform) {
  const QuantParams p{0.05, 0.0, 8, 8};
  const auto v = vibcodec::testing::random_signal(64, 9);
  std::vector<bool> mask(64);
  for (std::size_t i = 0; i < 64; ++i) mask[i] = (i % 3) == 0;
  const auto q = quantize_hp(make_token(v, mask), p);
  for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(q.codes[i], quantize_value(v[i], 0.05, 8));
}

TEST(FrameBits, UniformWidths) {
  EncodedFrame f;
  f.window_len = 64;
  f.token_len = 1;
  f.total_tokens = 64;
  f.fine_bits = f.coarse_bits = 8;
  f.band_bitmap.assign(64, false);
  for (std::uint16_t i = 0; i < 32; ++i) f.kept_indices.push_back(i);
  EXPECT_EQ(frame_bits(f), 256u);
  f.kept_indices.clear();
  EXPECT_EQ(frame_bits(f), 0u);
}

TEST(FrameBits, MixedWidths) {
  EncodedFrame f;
  f.window_len = 8;
  f.token_len = 4;
  f.total_tokens = 2;
  f.fine_bits = 8;
  f.coarse_bits = 4;
  f.band_bitmap = {true, true, false, false, false, false, false, false};
  f.kept_indices = {0, 1};
  EXPECT_EQ(frame_bits(f), 40u);
  EXPECT_EQ(side_info_bits(f), 32u);
}

TEST(Encode, KeptCountAndHeader) {
  const auto w = gear_windows(1, 3).front();
  const auto cls = default_classification();
  EncodeConfig cfg;
  cfg.compression_ratio = 4.0;
  const auto f = encode(w, cls, cfg);
  EXPECT_NO_THROW(f.validate());
  EXPECT_EQ(f.total_tokens, 128u);
  EXPECT_EQ(f.kept_count(), 32u);
  EXPECT_EQ(f.family(), CodecFamily::epicmt);
  EXPECT_EQ(f.band_bitmap, cls.protected_bins);
  EXPECT_EQ(f.sample_rate_hz, 20000u);
}

TEST(Encode, Deterministic) {
  const auto w = gear_windows(1, 8).front();
  const auto cls = default_classification();
  EncodeConfig cfg;
  cfg.compression_ratio = 8.0;
  EXPECT_EQ(encode(w, cls, cfg), encode(w, cls, cfg));
}

TEST(Encode, AutoDeltaNeverSaturates) {
  const auto cls = default_classification();
  for (const auto& w : gear_windows(20, 4)) {
    for (double cr : {1.0, 4.0, 16.0}) {
      EncodeConfig cfg;
      cfg.compression_ratio = cr;
      EXPECT_EQ(encode_detailed(w, cls, cfg).stats.saturated, 0u);
    }
  }
}

TEST(Encode, HeaderDeltaNeverBelowRequest) {
  const auto w = gear_windows(1, 2).front();
  EncodeConfig cfg;
  cfg.delta0 = 0.1234567891;
  const auto f = encode(w, default_classification(), cfg);
  EXPECT_GE(static_cast<double>(f.delta0), 0.1234567891);
  EXPECT_LT(static_cast<double>(f.delta0), 0.1234567891 * (1.0 + 1e-6));
}

TEST(Encode, NearLosslessWithFittedStep) {
  const auto cls = default_classification();
  for (const auto& w : gear_windows(10, 6)) {
    EncodeConfig cfg;
    cfg.compression_ratio = 1.0;
    cfg.fine_bits = cfg.coarse_bits = 16;
    const auto r = encode_detailed(w, cls, cfg);
    EXPECT_EQ(r.stats.saturated, 0u);
    const auto y = synthesize(r.frame).samples;
    EXPECT_GE(snr(w.samples, y), 60.0);
    // Orthonormal transform: per-sample error is bounded by the coefficient error norm.
    const auto c = dct2(std::span<const double>(w.samples));
    const auto chat = dequantize(r.frame);
    for (std::size_t k = 0; k < c.size(); ++k) EXPECT_LE(std::abs(c[k] - chat[k]), r.frame.step_of(k) / 2.0 + 1e-12);
  }
}

TEST(Encode, MicroStepSaturatesSixteenBitCodes) {
  // delta0 = 1e-6 * max|c| would need codes up to 1e6, far beyond 16 bits.
  const auto w = gear_windows(1, 6).front();
  const auto c = dct2(std::span<const double>(w.samples));
  EncodeConfig cfg;
  cfg.compression_ratio = 1.0;
  cfg.fine_bits = cfg.coarse_bits = 16;
  cfg.delta0 = 1e-6 * vibcodec::testing::max_abs(c);
  EXPECT_GT(encode_detailed(w, default_classification(), cfg).stats.saturated, 0u);
}

TEST(Encode, BudgetInfeasible) {
  const auto w = gear_windows(1, 1).front();
  EncodeConfig cfg;
  cfg.budget = BitBudget{31};  // one 8-coefficient 4-bit token needs 32
  EXPECT_THROW(encode(w, default_classification(), cfg), BudgetInfeasible);
  cfg.budget = BitBudget{0};
  EXPECT_THROW(encode(w, default_classification(), cfg), BudgetInfeasible);
}

TEST(Encode, BudgetAlwaysRespected) {
  std::mt19937_64 rng(42);
  const auto cls = default_classification();
  const auto windows = gear_windows(20, 11);
  for (int i = 0; i < 200; ++i) {
    EncodeConfig cfg;
    cfg.compression_ratio = 1.0 + static_cast<double>(rng() % 32);
    cfg.budget = BitBudget{32 + rng() % 4000};
    const auto r = encode_detailed(windows[static_cast<std::size_t>(i) % windows.size()], cls, cfg);
    EXPECT_LE(frame_bits(r.frame), cfg.budget->b_max);
  }
}

TEST(Encode, BudgetShrinkDropsLowestScores) {
  const auto w = gear_windows(1, 13).front();
  const auto cls = default_classification();
  EncodeConfig cfg;
  cfg.compression_ratio = 4.0;
  const auto full = encode_detailed(w, cls, cfg);
  cfg.budget = BitBudget{frame_bits(full.frame) / 2};
  const auto cut = encode_detailed(w, cls, cfg);
  ASSERT_LT(cut.frame.kept_count(), full.frame.kept_count());
  double min_kept = 1.0;
  for (auto i : cut.frame.kept_indices) min_kept = std::min(min_kept, cut.stats.scores[i]);
  for (auto i : full.frame.kept_indices) {
    if (!std::binary_search(cut.frame.kept_indices.begin(), cut.frame.kept_indices.end(), i)) {
      EXPECT_LE(cut.stats.scores[i], min_kept);
    }
  }
}

TEST(Encode, UniformWidthPayload) {
  const auto cls = default_classification();
  for (const auto& w : gear_windows(5, 21)) {
    EncodeConfig cfg;
    cfg.compression_ratio = 8.0;
    cfg.alpha = 0.0;
    cfg.fine_bits = cfg.coarse_bits = 6;
    const auto f = encode(w, cls, cfg);
    EXPECT_EQ(frame_bits(f), f.kept_count() * f.token_len * 6u);
  }
}

TEST(Encode, SelectionModes) {
  const auto w = gear_windows(1, 2).front();
  const auto cls = default_classification();
  EncodeConfig cfg;
  cfg.compression_ratio = 16.0;
  cfg.selection = SelectionMode::lowest_frequency;
  const auto low = encode(w, cls, cfg);
  ASSERT_EQ(low.kept_count(), 8u);
  for (std::uint16_t i = 0; i < 8; ++i) EXPECT_EQ(low.kept_indices[i], i);
  cfg.selection = SelectionMode::seeded_random;
  cfg.selection_seed = 77;
  const auto a = encode(w, cls, cfg);
  EXPECT_EQ(a, encode(w, cls, cfg));
  cfg.selection_seed = 78;
  EXPECT_EQ(a.kept_count(), encode(w, cls, cfg).kept_count());
  EXPECT_NE(a.kept_indices, encode(w, cls, cfg).kept_indices);
}

TEST(Encode, ProtectedBandsGetFinerSteps) {
  const auto w = gear_windows(1, 5).front();
  const auto cls = default_classification();
  EncodeConfig cfg;
  cfg.compression_ratio = 4.0;
  const auto f = encode(w, cls, cfg);
  for (std::size_t k = 0; k < 1024; ++k) {
    const double expect = cls.protected_bins[k] ? f.delta0 / 4.0 : f.delta0;
    EXPECT_NEAR(f.step_of(k), expect, 1e-12 * expect);
  }
}

TEST(Scorer, SeparableToySet) {
  std::vector<LabeledTokenFeatures> data;
  for (int i = 0; i < 40; ++i) {
    const double e = 0.1 * i;
    data.push_back({{1.0, e, 0.5}, 1});
    data.push_back({{0.0, e, 0.5}, 0});
  }
  const auto w = train_scorer(data, 500, 1.0);
  std::size_t hits = 0;
  for (const auto& d : data) hits += ((score_features(d.features, w) > 0.5) == (d.keep == 1)) ? 1 : 0;
  EXPECT_EQ(hits, data.size());
}

TEST(Scorer, ZeroEpochsKeepsInitialWeights) {
  std::vector<LabeledTokenFeatures> data{{{1, 0, 0}, 1}, {{0, 0, 0}, 0}};
  const ScorerWeights init{{0.3, -0.2, 0.1}, 0.7};
  const auto w = train_scorer(data, 0, 0.1, init);
  EXPECT_EQ(w.w, init.w);
  EXPECT_EQ(w.b, init.b);
}

TEST(Scorer, LossNonIncreasing) {
  std::vector<LabeledTokenFeatures> data;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double a = u(rng);
    data.push_back({{a, u(rng) * 3.0, u(rng)}, a > 0.5 ? 1 : 0});
  }
  ScorerWeights w{{0.0, 0.0, 0.0}, 0.0};
  double prev = scorer_loss(w, data);
  const double first = scorer_loss(train_scorer(data, 1, 0.05), data);
  for (int e = 0; e < 200; ++e) {
    w = train_scorer(data, 1, 0.05, w);
    const double l = scorer_loss(w, data);
    EXPECT_LE(l, prev + 1e-9);
    prev = l;
  }
  EXPECT_LE(prev, first);
}

TEST(Scorer, SingleClassRejected) {
  std::vector<LabeledTokenFeatures> data{{{1, 0, 0}, 1}, {{0, 1, 0}, 1}};
  EXPECT_THROW(train_scorer(data, 10, 0.1), std::invalid_argument);
}
