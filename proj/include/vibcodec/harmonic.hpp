#pragma once

// Protected frequency bands from gearbox kinematics: gear-mesh harmonics and
// shaft-rate sidebands, their projection onto the DCT bin grid, and band
// energy integration over a PSD.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "vibcodec/dsp.hpp"

namespace vibcodec {

struct KinematicSpec {
  double shaft_rpm = 1333.0;
  int pinion_teeth = 32;
  int n_harmonics = 3;
  int n_sidebands_per_harmonic = 2;
  double band_half_width_hz = 0.0;

  double shaft_hz() const { return shaft_rpm / 60.0; }
  double gear_mesh_hz() const { return shaft_hz() * pinion_teeth; }

  void validate() const {
    if (!(shaft_rpm > 0.0) || !std::isfinite(shaft_rpm)) throw std::invalid_argument("KinematicSpec: shaft_rpm must be positive");
    if (pinion_teeth <= 0) throw std::invalid_argument("KinematicSpec: pinion_teeth must be positive");
    if (n_harmonics <= 0) throw std::invalid_argument("KinematicSpec: n_harmonics must be positive");
    if (n_sidebands_per_harmonic < 0) throw std::invalid_argument("KinematicSpec: n_sidebands_per_harmonic must be nonnegative");
    if (!(band_half_width_hz > 0.0) || !std::isfinite(band_half_width_hz)) {
      throw std::invalid_argument("KinematicSpec: band_half_width_hz must be positive");
    }
  }
};

/// Two Hann-leakage bins plus 5 Hz of slack.
inline double default_band_half_width(double sample_rate_hz, std::size_t window_len) {
  return 2.0 * sample_rate_hz / static_cast<double>(window_len) + 5.0;
}

struct HarmonicMap {
  std::vector<double> carriers_hz;
  /// Grouped per carrier: c - J*fs .. c - fs, c + fs .. c + J*fs.
  std::vector<double> sidebands_hz;
  double band_half_width_hz = 0.0;

  bool empty() const { return carriers_hz.empty() && sidebands_hz.empty(); }
  std::size_t center_count() const { return carriers_hz.size() + sidebands_hz.size(); }
};

inline HarmonicMap derive_harmonics(const KinematicSpec& spec) {
  spec.validate();
  HarmonicMap map;
  map.band_half_width_hz = spec.band_half_width_hz;
  const double shaft = spec.shaft_hz();
  const double gmf = spec.gear_mesh_hz();
  for (int m = 1; m <= spec.n_harmonics; ++m) {
    const double carrier = m * gmf;
    map.carriers_hz.push_back(carrier);
    // A pair is emitted only when the lower line stays positive.
    int usable = 0;
    for (int j = 1; j <= spec.n_sidebands_per_harmonic; ++j) {
      if (carrier - j * shaft > 0.0) usable = j;
    }
    for (int j = usable; j >= 1; --j) map.sidebands_hz.push_back(carrier - j * shaft);
    for (int j = 1; j <= usable; ++j) map.sidebands_hz.push_back(carrier + j * shaft);
  }
  return map;
}

struct BandClassification {
  std::vector<bool> protected_bins;
  /// Centres above Nyquist that could not be placed on the bin grid.
  std::size_t ignored_centers = 0;

  std::size_t size() const { return protected_bins.size(); }
  std::size_t protected_count() const {
    return static_cast<std::size_t>(std::count(protected_bins.begin(), protected_bins.end(), true));
  }
};

/// Marks DCT bin k protected iff its nominal frequency k*fs/(2N) lies within
/// the half-width of a carrier or sideband. Centres above Nyquist are skipped
/// and counted in `ignored_centers`.
inline BandClassification classify_bins(const HarmonicMap& map, std::size_t window_len,
                                        double sample_rate_hz) {
  if (window_len == 0) throw std::invalid_argument("classify_bins: window length must be positive");
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("classify_bins: sample rate must be positive");
  BandClassification out;
  out.protected_bins.assign(window_len, false);
  if (map.empty()) return out;
  if (!(map.band_half_width_hz > 0.0)) throw std::invalid_argument("classify_bins: band half-width must be positive");

  const double nyquist = sample_rate_hz / 2.0;
  std::vector<double> centers;
  auto take = [&](double f) {
    if (f > nyquist) {
      ++out.ignored_centers;
    } else {
      centers.push_back(f);
    }
  };
  for (double f : map.carriers_hz) take(f);
  for (double f : map.sidebands_hz) take(f);

  const double hw = map.band_half_width_hz;
  for (std::size_t k = 0; k < window_len; ++k) {
    const double f = dct_bin_frequency(k, window_len, sample_rate_hz);
    for (double c : centers) {
      if (std::abs(f - c) <= hw) {
        out.protected_bins[k] = true;
        break;
      }
    }
  }
  return out;
}

struct BandEnergies {
  double carrier = 0.0;
  double sideband = 0.0;
  double broadband = 0.0;
};

namespace detail {

/// For each PSD bin, the index of the nearest centre within the half-width
/// (carriers first, then sidebands; ties go to the earlier centre) or -1.
inline std::vector<long> assign_psd_bins(const PsdEstimate& psd, const HarmonicMap& map) {
  const double fmax = psd.freqs_hz.empty() ? 0.0 : psd.freqs_hz.back();
  const double hw = map.band_half_width_hz;
  std::vector<double> centers(map.carriers_hz);
  centers.insert(centers.end(), map.sidebands_hz.begin(), map.sidebands_hz.end());
  for (double c : centers) {
    if (c + hw > fmax + 1e-9 * std::max(1.0, fmax)) {
      throw std::invalid_argument("scr_band_energies: band around " + std::to_string(c) +
                                  " Hz exceeds the PSD range (" + std::to_string(fmax) + " Hz)");
    }
  }
  std::vector<long> owner(psd.size(), -1);
  for (std::size_t k = 0; k < psd.size(); ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const double d = std::abs(psd.freqs_hz[k] - centers[c]);
      if (d <= hw && d < best) {
        best = d;
        owner[k] = static_cast<long>(c);
      }
    }
  }
  return owner;
}

}  // namespace detail

/// Energy integrated per centre (carriers then sidebands, map order). Each PSD
/// bin contributes to at most one centre, so overlapping bands never double count.
inline std::vector<double> band_energies_per_center(const PsdEstimate& psd, const HarmonicMap& map) {
  const auto owner = detail::assign_psd_bins(psd, map);
  std::vector<double> e(map.center_count(), 0.0);
  const double df = psd.bin_width_hz();
  for (std::size_t k = 0; k < psd.size(); ++k) {
    if (owner[k] >= 0) e[static_cast<std::size_t>(owner[k])] += psd.power[k] * df;
  }
  return e;
}

inline BandEnergies scr_band_energies(const PsdEstimate& psd, const HarmonicMap& map) {
  const auto per_center = band_energies_per_center(psd, map);
  BandEnergies out;
  for (std::size_t c = 0; c < per_center.size(); ++c) {
    (c < map.carriers_hz.size() ? out.carrier : out.sideband) += per_center[c];
  }
  out.broadband = psd.total_power();
  return out;
}

}  // namespace vibcodec
