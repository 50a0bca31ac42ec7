#pragma once

// Fidelity and physics-consistency measures for judging reconstructions:
// SNR, PRD, both spectral-consistency ratios, and the correlation, envelope,
// time-frequency and autocorrelation alignment losses.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vibcodec/dsp.hpp"
#include "vibcodec/harmonic.hpp"

namespace vibcodec {

/// Reported SNR when the reconstruction error is exactly zero.
inline constexpr double kSnrCapDb = 300.0;
inline constexpr std::size_t kDefaultAcMaxLag = 128;

namespace detail {

inline void require_same_length(std::span<const double> x, std::span<const double> xhat, const char* what) {
  if (x.size() != xhat.size()) {
    throw std::invalid_argument(std::string(what) + ": length mismatch (" + std::to_string(x.size()) + " vs " +
                                std::to_string(xhat.size()) + ")");
  }
}

inline double error_energy(std::span<const double> x, std::span<const double> xhat) {
  double e = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) e += (x[i] - xhat[i]) * (x[i] - xhat[i]);
  return e;
}

inline bool has_variance(std::span<const double> x) {
  if (x.size() < 2) return false;
  return std::any_of(x.begin(), x.end(), [&](double v) { return v != x[0]; });
}

}  // namespace detail

inline double mse(std::span<const double> x, std::span<const double> xhat) {
  detail::require_same_length(x, xhat, "mse");
  return x.empty() ? 0.0 : detail::error_energy(x, xhat) / static_cast<double>(x.size());
}

/// 10 log10(signal energy / error energy); kSnrCapDb when the error is zero.
inline double snr(std::span<const double> x, std::span<const double> xhat) {
  detail::require_same_length(x, xhat, "snr");
  const double ps = energy(x);
  if (!(ps > 0.0)) throw std::invalid_argument("snr: reference signal is all zero");
  const double pe = detail::error_energy(x, xhat);
  if (pe == 0.0) return kSnrCapDb;
  return std::min(kSnrCapDb, 10.0 * std::log10(ps / pe));
}

/// Percent root-mean-square difference.
inline double prd(std::span<const double> x, std::span<const double> xhat) {
  detail::require_same_length(x, xhat, "prd");
  const double ps = energy(x);
  if (!(ps > 0.0)) throw std::invalid_argument("prd: reference signal is all zero");
  return 100.0 * std::sqrt(detail::error_energy(x, xhat) / ps);
}

/// Energy in the annotated carrier and sideband bands over broadband energy.
inline double scr_consistency(std::span<const double> x, double sample_rate_hz, const HarmonicMap& map,
                              const WelchParams& welch = {}) {
  const auto e = scr_band_energies(welch_psd(x, sample_rate_hz, welch), map);
  if (!(e.broadband > 0.0)) throw std::invalid_argument("scr_consistency: signal has no broadband energy");
  return (e.carrier + e.sideband) / e.broadband;
}

/// Sideband-band energy over carrier-band energy; 0 when the map has no sidebands.
inline double scr_sideband(std::span<const double> x, double sample_rate_hz, const HarmonicMap& map,
                           const WelchParams& welch = {}) {
  const auto e = scr_band_energies(welch_psd(x, sample_rate_hz, welch), map);
  if (map.sidebands_hz.empty()) return 0.0;
  if (!(e.carrier > 0.0)) throw std::invalid_argument("scr_sideband: signal has no carrier-band energy");
  return e.sideband / e.carrier;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  detail::require_same_length(x, y, "pearson");
  if (!detail::has_variance(x) || !detail::has_variance(y)) {
    throw std::invalid_argument("pearson: constant input has zero variance");
  }
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i] - mx;
    const double b = y[i] - my;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// 1 - Pearson correlation, in [0, 2].
inline double gda_loss(std::span<const double> x, std::span<const double> xhat) { return 1.0 - pearson(x, xhat); }

/// Octave band edges from Nyquist/16 up to Nyquist (four bands).
inline std::vector<double> default_mec_edges(double sample_rate_hz) {
  const double nyq = sample_rate_hz / 2.0;
  return {nyq / 16.0, nyq / 8.0, nyq / 4.0, nyq / 2.0, nyq};
}

/// Mean over bands of the MSE between Hilbert envelopes of the band-passed
/// signals. An odd trailing sample is dropped so the envelope is defined.
inline double mec_loss(std::span<const double> x, std::span<const double> xhat, double sample_rate_hz,
                       std::span<const double> edges) {
  detail::require_same_length(x, xhat, "mec_loss");
  if (edges.size() < 2) throw std::invalid_argument("mec_loss: need at least one band (two edges)");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw std::invalid_argument("mec_loss: band edges must be ascending");
  }
  const std::size_t n = x.size() - x.size() % 2;
  if (n == 0) return 0.0;
  const auto xs = x.first(n);
  const auto ys = xhat.first(n);
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < edges.size(); ++s) {
    const auto ex = hilbert_envelope(bandpass_zero_phase(xs, sample_rate_hz, edges[s], edges[s + 1]));
    const auto ey = hilbert_envelope(bandpass_zero_phase(ys, sample_rate_hz, edges[s], edges[s + 1]));
    total += mse(ex.values, ey.values);
  }
  return total / static_cast<double>(edges.size() - 1);
}

inline double mec_loss(std::span<const double> x, std::span<const double> xhat, double sample_rate_hz) {
  const auto edges = default_mec_edges(sample_rate_hz);
  return mec_loss(x, xhat, sample_rate_hz, edges);
}

/// Mean squared difference of Morlet CWT magnitudes. Rows are computed in
/// lockstep so the full tensors are never materialised.
inline double cwt_loss(std::span<const double> x, std::span<const double> xhat, double sample_rate_hz,
                       std::span<const double> scales) {
  detail::require_same_length(x, xhat, "cwt_loss");
  detail::check_cwt_scales(scales, sample_rate_hz);
  if (x.empty()) return 0.0;
  require_finite(x, "cwt_loss");
  require_finite(xhat, "cwt_loss");
  const auto sx = detail::cwt_spectrum(x);
  const auto sy = detail::cwt_spectrum(xhat);
  std::vector<std::complex<double>> buf;
  std::vector<double> mx, my;
  double total = 0.0;
  for (double s : scales) {
    detail::morlet_row(sx, x.size(), sample_rate_hz, s, buf, mx);
    detail::morlet_row(sy, x.size(), sample_rate_hz, s, buf, my);
    for (std::size_t i = 0; i < x.size(); ++i) total += (mx[i] - my[i]) * (mx[i] - my[i]);
  }
  return total / static_cast<double>(scales.size() * x.size());
}

inline double cwt_loss(std::span<const double> x, std::span<const double> xhat, double sample_rate_hz) {
  const auto scales = default_cwt_scales(sample_rate_hz);
  return cwt_loss(x, xhat, sample_rate_hz, scales);
}

/// Mean squared difference of normalized autocorrelations over lags 1..max_lag
/// (lag 0 is 1 for both by construction).
inline double ac_loss(std::span<const double> x, std::span<const double> xhat, std::size_t max_lag = kDefaultAcMaxLag) {
  detail::require_same_length(x, xhat, "ac_loss");
  if (max_lag == 0) throw std::invalid_argument("ac_loss: max_lag must be positive");
  const auto rx = autocorr_norm(x, max_lag);
  const auto ry = autocorr_norm(xhat, max_lag);
  double s = 0.0;
  for (std::size_t k = 1; k <= max_lag; ++k) s += (rx[k] - ry[k]) * (rx[k] - ry[k]);
  return s / static_cast<double>(max_lag);
}

// ---------------------------------------------------------------------------
// Report

struct MetricsOptions {
  WelchParams welch{};
  std::vector<double> mec_edges;   // empty: default_mec_edges
  std::vector<double> cwt_scales;  // empty: default_cwt_scales
  std::size_t ac_max_lag = kDefaultAcMaxLag;
};

/// Fidelity bundle for one (original, reconstruction) pair. The SCR fields
/// describe the reconstruction; the *_ref fields hold the original's values.
struct MetricsReport {
  double snr_db = 0.0;
  double prd_percent = 0.0;
  double scr_consistency = 0.0;
  double scr_sideband = 0.0;
  double gda_loss = 0.0;
  double mec_loss = 0.0;
  double cwt_loss = 0.0;
  double ac_loss = 0.0;
  double mse = 0.0;
  double scr_consistency_ref = 0.0;
  double scr_sideband_ref = 0.0;
  WelchParams welch{};

  /// |SCR_consistency(xhat) - SCR_consistency(x)| / SCR_consistency(x).
  double scr_consistency_rel_error() const {
    return scr_consistency_ref > 0.0 ? std::abs(scr_consistency - scr_consistency_ref) / scr_consistency_ref : 0.0;
  }
};

namespace detail {

/// SCR pair of a signal, with zero for signals lacking the reference energy
/// so that reports on degenerate reconstructions stay finite.
inline std::pair<double, double> scr_pair(std::span<const double> x, double fs, const HarmonicMap& map,
                                          const WelchParams& welch) {
  const auto e = scr_band_energies(welch_psd(x, fs, welch), map);
  const double c = e.broadband > 0.0 ? (e.carrier + e.sideband) / e.broadband : 0.0;
  const double s = (!map.sidebands_hz.empty() && e.carrier > 0.0) ? e.sideband / e.carrier : 0.0;
  return {c, s};
}

/// Autocorrelation of a constant signal is taken as a unit impulse.
inline std::vector<double> autocorr_or_impulse(std::span<const double> x, std::size_t max_lag) {
  if (detail::has_variance(x)) return autocorr_norm(x, max_lag);
  std::vector<double> r(max_lag + 1, 0.0);
  r[0] = 1.0;
  return r;
}

}  // namespace detail

/// Computes every metric. Unlike the individual losses, the report is total:
/// a constant reconstruction gets correlation 0 and an impulse autocorrelation.
inline MetricsReport compute_report(std::span<const double> x, std::span<const double> xhat, double sample_rate_hz,
                                    const HarmonicMap& map, const MetricsOptions& opts = {}) {
  detail::require_same_length(x, xhat, "compute_report");
  MetricsReport r;
  r.welch = opts.welch;
  r.snr_db = snr(x, xhat);
  r.prd_percent = prd(x, xhat);
  r.mse = mse(x, xhat);
  std::tie(r.scr_consistency, r.scr_sideband) = detail::scr_pair(xhat, sample_rate_hz, map, opts.welch);
  std::tie(r.scr_consistency_ref, r.scr_sideband_ref) = detail::scr_pair(x, sample_rate_hz, map, opts.welch);
  r.gda_loss = (detail::has_variance(x) && detail::has_variance(xhat)) ? gda_loss(x, xhat) : 1.0;
  const auto edges = opts.mec_edges.empty() ? default_mec_edges(sample_rate_hz) : opts.mec_edges;
  r.mec_loss = mec_loss(x, xhat, sample_rate_hz, edges);
  const auto scales = opts.cwt_scales.empty() ? default_cwt_scales(sample_rate_hz) : opts.cwt_scales;
  r.cwt_loss = cwt_loss(x, xhat, sample_rate_hz, scales);
  const std::size_t lag = std::min(opts.ac_max_lag, x.size() - 1);
  const auto rx = detail::autocorr_or_impulse(x, lag);
  const auto ry = detail::autocorr_or_impulse(xhat, lag);
  double s = 0.0;
  for (std::size_t k = 1; k <= lag; ++k) s += (rx[k] - ry[k]) * (rx[k] - ry[k]);
  r.ac_loss = lag > 0 ? s / static_cast<double>(lag) : 0.0;
  return r;
}

struct CompositeWeights {
  double mse = 0.0;
  double gda = 0.0;
  double mec = 0.0;
  double cwt = 0.0;
  double ac = 0.0;

  void validate() const {
    for (double w : {mse, gda, mec, cwt, ac}) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("CompositeWeights: weights must be nonnegative");
    }
  }
};

/// Weighted sum of the report's losses plus the plain MSE term.
inline double composite(const MetricsReport& r, const CompositeWeights& w) {
  w.validate();
  return w.mse * r.mse + w.gda * r.gda_loss + w.mec * r.mec_loss + w.cwt * r.cwt_loss + w.ac * r.ac_loss;
}

inline void to_json(nlohmann::json& j, const MetricsReport& r) {
  j = nlohmann::json{{"snr_db", r.snr_db},
                     {"prd_percent", r.prd_percent},
                     {"scr_consistency", r.scr_consistency},
                     {"scr_sideband", r.scr_sideband},
                     {"gda_loss", r.gda_loss},
                     {"mec_loss", r.mec_loss},
                     {"cwt_loss", r.cwt_loss},
                     {"ac_loss", r.ac_loss},
                     {"mse", r.mse},
                     {"scr_consistency_ref", r.scr_consistency_ref},
                     {"scr_sideband_ref", r.scr_sideband_ref},
                     {"welch_segment_len", r.welch.segment_len},
                     {"welch_overlap_fraction", r.welch.overlap_fraction}};
}

inline void from_json(const nlohmann::json& j, MetricsReport& r) {
  j.at("snr_db").get_to(r.snr_db);
  j.at("prd_percent").get_to(r.prd_percent);
  j.at("scr_consistency").get_to(r.scr_consistency);
  j.at("scr_sideband").get_to(r.scr_sideband);
  j.at("gda_loss").get_to(r.gda_loss);
  j.at("mec_loss").get_to(r.mec_loss);
  j.at("cwt_loss").get_to(r.cwt_loss);
  j.at("ac_loss").get_to(r.ac_loss);
  r.mse = j.value("mse", 0.0);
  r.scr_consistency_ref = j.value("scr_consistency_ref", 0.0);
  r.scr_sideband_ref = j.value("scr_sideband_ref", 0.0);
  r.welch.segment_len = j.value("welch_segment_len", WelchParams{}.segment_len);
  r.welch.overlap_fraction = j.value("welch_overlap_fraction", WelchParams{}.overlap_fraction);
}

}  // namespace vibcodec
