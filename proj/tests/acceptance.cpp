// Acceptance gate: one PASS/FAIL line per criterion, with the measured values
// and wall time. Exit status is nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "test_util.hpp"
#include "vibcodec/vibcodec.hpp"

using namespace vibcodec;
using vibcodec::testing::random_frame;
using vibcodec::testing::random_signal;

namespace {

constexpr double kFs = 20000.0;
constexpr std::size_t kN = 1024;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int g_failures = 0;

void criterion(int id, const char* name, double time_limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (time_limit_s > 0.0 && secs >= time_limit_s) {
    o.pass = false;
    o.detail += "; over the time limit";
  }
  if (!o.pass) ++g_failures;
  std::printf("%s %2d %-32s %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

const HarmonicMap& default_map() {
  static const HarmonicMap map = derive_harmonics(default_kinematics(kFs, kN));
  return map;
}

const BandClassification& default_cls() {
  static const BandClassification cls = classify_bins(default_map(), kN, kFs);
  return cls;
}

struct Labeled {
  std::vector<SignalWindow> windows;
  std::vector<std::string> labels;
};

/// The default four-class corpus with `per_class` contiguous windows per class.
Labeled corpus(std::size_t per_class, std::uint64_t seed) {
  CorpusConfig cc;
  cc.seed = seed;
  Labeled out;
  for (const auto& c : default_corpus_classes(cc)) {
    const auto x = synth_gear(default_kinematics(kFs, kN), c.profile, static_cast<double>(per_class * kN) / kFs, kFs);
    auto ws = segment(x, kFs, kN, kN);
    ws.resize(std::min(ws.size(), per_class));
    for (auto& w : ws) {
      out.windows.push_back(std::move(w));
      out.labels.push_back(c.label);
    }
  }
  return out;
}

/// Fifty windows spread evenly over the four classes.
std::vector<SignalWindow> fifty_windows(std::uint64_t seed) {
  auto c = corpus(13, seed).windows;
  c.resize(50);
  return c;
}

// ---------------------------------------------------------------------------

Outcome wire_round_trip() {
  std::mt19937_64 rng(11);
  std::size_t mismatches = 0;
  std::vector<std::vector<std::uint8_t>> seeds;
  for (int i = 0; i < 1000; ++i) {
    const auto f = random_frame(rng);
    const auto b = pack_frame(f);
    if (!(parse_frame(b) == f)) ++mismatches;
    if (seeds.size() < 64) seeds.push_back(b);
  }
  // Fuzz: bit flips, truncations, extensions and pure noise.
  std::size_t rejected = 0, accepted = 0, crashes = 0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<std::uint8_t> b;
    switch (i % 4) {
      case 0: {
        b = seeds[rng() % seeds.size()];
        const auto flips = 1 + rng() % 8;
        for (std::size_t k = 0; k < flips; ++k) b[rng() % b.size()] ^= static_cast<std::uint8_t>(1u << (rng() % 8));
        // Half the time reseal the CRC so the structural checks are reached.
        if (rng() % 2 && b.size() > kFrameCrcBytes) {
          const auto crc = crc32_of(std::span<const std::uint8_t>(b).first(b.size() - kFrameCrcBytes));
          for (std::size_t k = 0; k < kFrameCrcBytes; ++k) b[b.size() - kFrameCrcBytes + k] = static_cast<std::uint8_t>(crc >> (8 * k));
        }
        break;
      }
      case 1:
        b = seeds[rng() % seeds.size()];
        b.resize(rng() % b.size());
        break;
      case 2:
        b = seeds[rng() % seeds.size()];
        for (std::size_t k = 0, extra = 1 + rng() % 16; k < extra; ++k) b.push_back(static_cast<std::uint8_t>(rng()));
        break;
      default:
        b.resize(rng() % 512);
        for (auto& v : b) v = static_cast<std::uint8_t>(rng());
        if (b.size() >= 4 && rng() % 2) std::copy(kFrameMagic.begin(), kFrameMagic.end(), b.begin());
    }
    try {
      parse_frame(b);
      (void)read_frame_stream(b);
      ++accepted;
    } catch (const FrameError&) {
      ++rejected;
    } catch (...) {
      ++crashes;
    }
  }
  return {mismatches == 0 && crashes == 0,
          fmt("round-trip mismatches %.0f/1000; fuzz 10000: %.0f rejected, %.0f accepted, %.0f crashes",
              static_cast<double>(mismatches), static_cast<double>(rejected), static_cast<double>(accepted),
              static_cast<double>(crashes))};
}

Outcome budget_enforcement() {
  std::mt19937_64 rng(12);
  const auto windows = corpus(10, 3).windows;
  std::size_t encodes = 0, violations = 0, infeasible = 0, uniform_checks = 0, uniform_mismatch = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto& w = windows[rng() % windows.size()];
    EncodeConfig cfg;
    cfg.compression_ratio = std::pow(2.0, static_cast<double>(rng() % 7));
    cfg.fine_bits = 4 + static_cast<int>(rng() % 13);
    cfg.coarse_bits = 2 + static_cast<int>(rng() % static_cast<std::uint64_t>(cfg.fine_bits - 1));
    const std::uint64_t b_max = 16 + rng() % 20000;
    cfg.budget = BitBudget{b_max};
    try {
      const auto f = encode(w, default_cls(), cfg);
      ++encodes;
      if (frame_bits(f) > b_max) ++violations;
    } catch (const BudgetInfeasible&) {
      ++infeasible;
    }
    // Uniform widths without a budget: K * d * q exactly.
    EncodeConfig u;
    u.compression_ratio = cfg.compression_ratio;
    u.fine_bits = u.coarse_bits = cfg.fine_bits;
    const auto f = encode(w, default_cls(), u);
    const auto k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(kN / u.token_len) / u.compression_ratio)));
    ++uniform_checks;
    if (frame_bits(f) != k * u.token_len * static_cast<std::uint64_t>(u.fine_bits)) ++uniform_mismatch;
  }
  return {violations == 0 && uniform_mismatch == 0 && encodes > 0,
          fmt("%.0f budgeted encodes (%.0f infeasible), %.0f over budget; uniform K*d*q mismatches %.0f",
              static_cast<double>(encodes), static_cast<double>(infeasible), static_cast<double>(violations),
              static_cast<double>(uniform_mismatch)) +
              "/" + std::to_string(uniform_checks)};
}

/// Stream-interior SNR of 50 stream windows encoded at CR 1 with 16-bit codes.
struct NearLossless {
  double snr_db;
  std::size_t saturated;
};

NearLossless near_lossless_snr(std::optional<double> delta0_fraction) {
  FaultProfile p;
  p.harmonic_amplitudes = {1.0, 0.5, 0.6};
  p.sideband_mod_index = 0.3;
  p.noise_snr_db = 20.0;
  p.seed = 21;
  const std::size_t frames = 50;
  const auto x = synth_gear(default_kinematics(kFs, kN), p, static_cast<double>((frames + 1) * kN / 2) / kFs, kFs);
  EncodeConfig cfg;
  cfg.compression_ratio = 1.0;
  cfg.fine_bits = cfg.coarse_bits = 16;
  std::vector<SignalWindow> tapered;
  for (const auto& w : segment(x, kFs, kN, kN / 2)) tapered.push_back(analysis_taper(w));
  if (delta0_fraction) {
    double peak = 0.0;
    for (const auto& w : tapered) {
      for (double c : dct2(std::span<const double>(w.samples))) peak = std::max(peak, std::abs(c));
    }
    cfg.delta0 = *delta0_fraction * peak;
  }
  std::vector<EncodedFrame> enc;
  std::size_t saturated = 0;
  for (const auto& w : tapered) {
    auto r = encode_detailed(w, default_cls(), cfg);
    saturated += r.stats.saturated;
    enc.push_back(std::move(r.frame));
  }
  const auto y = decode_stream(read_frame_stream(pack_stream(enc)));
  const auto in = stream_interior(y.size(), kN);
  return {snr(std::span(x).subspan(in.begin, in.size()), std::span(y).subspan(in.begin, in.size())), saturated};
}

Outcome near_lossless() {
  const auto stated = near_lossless_snr(1e-6);
  const auto fitted = near_lossless_snr(std::nullopt);
  return {stated.snr_db >= 60.0,
          fmt("delta0=1e-6*max|c|: SNR %.2f dB, %.0f saturated codes; fitted delta0 (info): SNR %.2f dB", stated.snr_db,
              static_cast<double>(stated.saturated), fitted.snr_db)};
}

Outcome monotonicity() {
  const auto windows = fifty_windows(4);
  const std::vector<double> crs{4, 8, 16, 32, 64};
  std::vector<double> hp, dct;
  for (double cr : crs) {
    double s_hp = 0.0, s_dct = 0.0;
    EncodeConfig cfg;
    cfg.compression_ratio = cr;
    const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(kN) / cr)));
    for (const auto& w : windows) {
      s_hp += snr(w.samples, synthesize(encode(w, default_cls(), cfg)).samples);
      s_dct += snr(w.samples, synthesize(dct_topk_encode(w, keep, cfg.fine_bits)).samples);
    }
    hp.push_back(s_hp / static_cast<double>(windows.size()));
    dct.push_back(s_dct / static_cast<double>(windows.size()));
  }
  bool ok = true;
  for (std::size_t i = 1; i < crs.size(); ++i) ok = ok && hp[i] <= hp[i - 1] + 0.2 && dct[i] <= dct[i - 1] + 0.2;
  std::string detail = "epicmt dB";
  for (double v : hp) detail += fmt(" %.2f", v);
  detail += "; dct dB";
  for (double v : dct) detail += fmt(" %.2f", v);
  return {ok, detail};
}

Outcome harmonic_protection() {
  bool ok = true;
  std::string detail;
  for (double cr : {16.0, 32.0, 64.0}) {
    int wins = 0;
    double worst_margin = 1e300;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto c = corpus(250, seed);
      EncodeConfig hp;
      hp.compression_ratio = cr;
      auto flat = hp;
      flat.alpha = 0.0;
      double e_hp = 0.0, e_flat = 0.0;
      for (const auto& w : c.windows) {
        const auto a = encode(w, default_cls(), hp);
        const auto b = encode(w, default_cls(), flat);
        if (frame_bits(a) != frame_bits(b)) throw std::logic_error("variants differ in bits");
        const double ref = scr_consistency(w.samples, kFs, default_map());
        e_hp += std::abs(scr_consistency(synthesize(a).samples, kFs, default_map()) - ref) / ref;
        e_flat += std::abs(scr_consistency(synthesize(b).samples, kFs, default_map()) - ref) / ref;
      }
      if (e_hp <= e_flat) ++wins;
      worst_margin = std::min(worst_margin, (e_flat - e_hp) / static_cast<double>(c.windows.size()));
    }
    ok = ok && wins == 5;
    detail += fmt("CR %.0f: HP<=uniform %.0f/5 seeds, min(uniform-HP) %.2e; ", cr, wins, worst_margin);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

Outcome peak_retention() {
  const auto windows = corpus(50, 6).windows;
  const auto& carriers = default_map().carriers_hz;
  const WelchParams wp{};
  auto peak_bins = [&](const std::vector<double>& x) {
    const auto psd = welch_psd(x, kFs, wp);
    const double df = psd.freqs_hz[1] - psd.freqs_hz[0];
    std::vector<std::size_t> out;
    for (std::size_t h = 0; h < 3; ++h) {
      const auto centre = static_cast<std::size_t>(std::llround(carriers[h] / df));
      std::size_t best = centre;
      for (std::size_t k = centre - 3; k <= centre + 3; ++k) {
        if (psd.power[k] > psd.power[best]) best = k;
      }
      out.push_back(best);
    }
    return out;
  };
  bool ok = true;
  std::string detail;
  for (double cr : {4.0, 8.0, 16.0}) {
    EncodeConfig cfg;
    cfg.compression_ratio = cr;
    std::size_t good = 0;
    for (const auto& w : windows) {
      const auto a = peak_bins(w.samples);
      const auto b = peak_bins(synthesize(encode(w, default_cls(), cfg)).samples);
      bool all = true;
      for (std::size_t h = 0; h < 3; ++h) all = all && (a[h] > b[h] ? a[h] - b[h] : b[h] - a[h]) <= 1;
      good += all ? 1 : 0;
    }
    const double frac = static_cast<double>(good) / static_cast<double>(windows.size());
    ok = ok && frac >= 0.95;
    detail += fmt("CR %.0f: %.1f%% ", cr, 100.0 * frac);
  }
  return {ok, detail + "of windows within +-1 bin"};
}

Outcome downstream() {
  double orig = 0.0, rec = 0.0;
  EncodeConfig cfg;
  cfg.compression_ratio = 8.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto c = corpus(250, 100 + seed);
    std::vector<LabeledFeatures> train;
    std::vector<FeatureVector> test_orig, test_rec;
    std::vector<std::string> test_labels;
    for (std::size_t i = 0; i < c.windows.size(); ++i) {
      const auto& w = c.windows[i];
      if (i % 250 < 200) {
        train.push_back({c.labels[i], extract_features(w.samples, kFs, default_map())});
      } else {
        test_orig.push_back(extract_features(w.samples, kFs, default_map()));
        test_rec.push_back(extract_features(synthesize(encode(w, default_cls(), cfg)).samples, kFs, default_map()));
        test_labels.push_back(c.labels[i]);
      }
    }
    const auto acc = accuracy_delta(fit_centroids(train), test_orig, test_rec, test_labels);
    orig += acc.original / 5.0;
    rec += acc.reconstructed / 5.0;
  }
  return {rec >= orig - 0.05, fmt("accuracy originals %.1f%%, reconstructions %.1f%%", 100.0 * orig, 100.0 * rec)};
}

Outcome metric_identities() {
  std::mt19937_64 rng(8);
  double worst_identity = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 16 + rng() % 500;
    const auto x = random_signal(n, rng());
    auto y = random_signal(n, rng(), std::pow(10.0, -static_cast<double>(rng() % 6)));
    for (std::size_t k = 0; k < n; ++k) y[k] += x[k];
    const double predicted = 100.0 * std::pow(10.0, -snr(x, y) / 20.0);
    worst_identity = std::max(worst_identity, std::abs(prd(x, y) - predicted) / predicted);
  }

  std::size_t nonzero = 0, gda_bad = 0, sym_bad = 0;
  for (int i = 0; i < 20; ++i) {
    const auto x = random_signal(2048, 500 + static_cast<std::uint64_t>(i));
    const auto y = random_signal(2048, 900 + static_cast<std::uint64_t>(i));
    const auto r = compute_report(x, x, kFs, default_map());
    if (r.mse != 0.0 || r.gda_loss > 1e-12 || r.mec_loss != 0.0 || r.cwt_loss != 0.0 || r.ac_loss != 0.0 ||
        r.prd_percent != 0.0 || r.scr_consistency_rel_error() != 0.0) {
      ++nonzero;
    }
    auto affine = y;
    for (double& v : affine) v = 3.5 * v - 2.0;
    if (std::abs(gda_loss(x, affine) - gda_loss(x, y)) > 1e-12 || gda_loss(y, affine) > 1e-12) ++gda_bad;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), 1e-300); };
    if (rel(mec_loss(x, y, kFs), mec_loss(y, x, kFs)) > 1e-12 || rel(cwt_loss(x, y, kFs), cwt_loss(y, x, kFs)) > 1e-12 ||
        rel(ac_loss(x, y), ac_loss(y, x)) > 1e-12) {
      ++sym_bad;
    }
  }
  return {worst_identity <= 1e-9 && nonzero == 0 && gda_bad == 0 && sym_bad == 0,
          fmt("max SNR/PRD identity error %.1e; nonzero losses at identity %.0f/20; affine %.0f/20; asymmetric %.0f/20",
              worst_identity, static_cast<double>(nonzero), static_cast<double>(gda_bad), static_cast<double>(sym_bad))};
}

Outcome refine_contraction() {
  FaultProfile p;
  p.harmonic_amplitudes = {1.0, 0.5, 0.6};
  p.sideband_mod_index = 0.3;
  p.noise_snr_db = 20.0;
  p.seed = 9;
  const auto windows = segment(synth_gear(default_kinematics(kFs, kN), p, 100.0 * kN / kFs, kFs), kFs, kN, kN);
  std::size_t increases = 0, identity_bad = 0;
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    EncodeConfig cfg;
    cfg.compression_ratio = 8.0;
    const auto f = encode(windows[i], default_cls(), cfg);
    const auto targets = protected_targets(f);
    const auto xhat = synthesize(f).samples;
    if (pc_refine(xhat, targets, RefineConfig::constant(0)) != xhat ||
        pc_refine(xhat, targets, RefineConfig::constant(4, 0.5, 0.0)) != xhat) {
      ++identity_bad;
    }
    // Perturbed start so the projection has something to contract.
    auto x = xhat;
    const auto noise = random_signal(kN, 1000 + i, 0.1);
    for (std::size_t k = 0; k < kN; ++k) x[k] += noise[k];
    double prev = protected_deviation(x, targets);
    first += prev;
    for (std::size_t k = 0; k < 4; ++k) {
      x = pc_refine(x, targets, RefineConfig::constant(1));
      const double d = protected_deviation(x, targets);
      if (d > prev * (1.0 + 1e-12) + 1e-12) ++increases;
      prev = d;
    }
    last += prev;
  }
  return {increases == 0 && identity_bad == 0 && windows.size() == 100,
          fmt("%.0f frames, %.0f increasing steps, identity failures %.0f", static_cast<double>(windows.size()),
              static_cast<double>(increases), static_cast<double>(identity_bad)) +
              fmt(", mean deviation %.3g -> %.3g", first / 100.0, last / 100.0)};
}

Outcome sats_cardinality() {
  std::size_t cases = 0, bad = 0;
  for (std::size_t n : {8u, 16u, 128u}) {
    for (double r : {1.0, 2.0, 4.0, 8.0, 16.0}) {
      const auto expected = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) / r)));
      const auto scores = random_signal(n, n * 31 + static_cast<std::size_t>(r));
      EncodeConfig cfg;
      cfg.compression_ratio = r;
      cfg.token_len = 8;
      const SignalWindow w{random_signal(n * cfg.token_len, n + 7), kFs, 0};
      const auto cls = classify_bins(default_map(), w.size(), kFs);
      const auto f = encode(w, cls, cfg);
      ++cases;
      if (select_tokens(scores, r).size() != expected || f.kept_count() != expected) ++bad;
    }
  }
  return {bad == 0, fmt("%.0f/%.0f grid cells match max(1, round(N/R))", static_cast<double>(cases - bad),
                        static_cast<double>(cases))};
}

Outcome performance() {
  const auto w = fifty_windows(12).front();
  EncodeConfig cfg;
  cfg.compression_ratio = 16.0;
  const auto& cls = default_cls();
  auto once = [&] {
    const auto bytes = pack_frame(encode(w, cls, cfg));
    return synthesize(parse_frame(bytes)).samples[0];
  };
  double sink = 0.0;
  for (int i = 0; i < 20; ++i) sink += once();
  std::vector<double> ms;
  for (int i = 0; i < 200; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    sink += once();
    ms.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(ms.begin(), ms.end());
  const double median = ms[ms.size() / 2];
  return {median < 5.0 && std::isfinite(sink),
          fmt("encode+pack+parse+synthesize median %.3f ms, p95 %.3f ms", median, ms[ms.size() * 95 / 100])};
}

}  // namespace

int main() {
  criterion(1, "wire round trip and fuzz", 30.0, wire_round_trip);
  criterion(2, "budget enforcement", 60.0, budget_enforcement);
  criterion(3, "near-lossless path", 0.0, near_lossless);
  criterion(4, "SNR monotone in CR", 0.0, monotonicity);
  criterion(5, "harmonic protection vs uniform", 0.0, harmonic_protection);
  criterion(6, "harmonic peak retention", 0.0, peak_retention);
  criterion(7, "downstream accuracy", 120.0, downstream);
  criterion(8, "metric identities", 0.0, metric_identities);
  criterion(9, "refinement contraction", 0.0, refine_contraction);
  criterion(10, "SATS cardinality", 0.0, sats_cardinality);
  criterion(11, "window codec latency", 0.0, performance);
  std::printf("%d of 11 criteria failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
