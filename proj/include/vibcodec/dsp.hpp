#pragma once

// Signal-analysis primitives shared by the codec, metrics and diagnostics:
// orthonormal DCT-II, Welch PSD, Hilbert envelope, normalized
// autocorrelation, Morlet CWT and a zero-phase band-pass.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vibcodec/fft.hpp"

namespace vibcodec {

inline constexpr std::size_t kDefaultWindowLen = 1024;

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline double energy(std::span<const double> x) {
  double e = 0.0;
  for (double v : x) e += v * v;
  return e;
}

inline double rms(std::span<const double> x) {
  return x.empty() ? 0.0 : std::sqrt(energy(x) / static_cast<double>(x.size()));
}

inline double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

inline void require_finite(std::span<const double> x, const char* what) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) {
      throw std::invalid_argument(std::string(what) + ": non-finite sample at index " +
                                  std::to_string(i));
    }
  }
}

/// One fixed-length slice of a sensor stream.
struct SignalWindow {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;
  std::size_t start_index = 0;

  std::size_t size() const { return samples.size(); }

  /// Throws std::invalid_argument unless the length is a power of two, the
  /// rate is positive and every sample is finite.
  void validate() const {
    if (!is_power_of_two(samples.size())) {
      throw std::invalid_argument("SignalWindow: length " + std::to_string(samples.size()) +
                                  " is not a power of two");
    }
    if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
      throw std::invalid_argument("SignalWindow: sample rate must be positive");
    }
    require_finite(samples, "SignalWindow");
  }
};

/// Orthonormal DCT-II coefficients of a window.
struct Spectrum {
  std::vector<double> coefficients;
  double bin_spacing_hz = 0.0;

  std::size_t size() const { return coefficients.size(); }
  double sample_rate_hz() const { return 2.0 * bin_spacing_hz * static_cast<double>(size()); }
};

/// Nominal frequency of DCT bin k for an N-point window: k * fs / (2N).
inline double dct_bin_frequency(std::size_t k, std::size_t n, double sample_rate_hz) {
  return static_cast<double>(k) * sample_rate_hz / (2.0 * static_cast<double>(n));
}

/// Orthonormal DCT-II of an arbitrary-length real sequence.
inline std::vector<double> dct2(std::span<const double> x) {
  auto y = detail::r2r(detail::PlanKind::redft10, x);
  if (y.empty()) return y;
  const double n = static_cast<double>(x.size());
  y[0] *= std::sqrt(1.0 / (4.0 * n));
  const double s = std::sqrt(1.0 / (2.0 * n));
  for (std::size_t k = 1; k < y.size(); ++k) y[k] *= s;
  return y;
}

/// Inverse of dct2 (orthonormal DCT-III).
inline std::vector<double> idct2(std::span<const double> c) {
  if (c.empty()) return {};
  const double n = static_cast<double>(c.size());
  std::vector<double> y(c.begin(), c.end());
  y[0] *= std::sqrt(1.0 / n);
  const double s = std::sqrt(1.0 / (2.0 * n));
  for (std::size_t k = 1; k < y.size(); ++k) y[k] *= s;
  return detail::r2r(detail::PlanKind::redft01, y);
}

inline Spectrum dct2(const SignalWindow& window) {
  window.validate();
  Spectrum s;
  s.coefficients = dct2(std::span<const double>(window.samples));
  s.bin_spacing_hz = window.sample_rate_hz / (2.0 * static_cast<double>(window.size()));
  return s;
}

/// Inverse transform; `window_len` is the configured length the spectrum must match.
inline SignalWindow idct2(const Spectrum& spectrum, std::size_t window_len) {
  if (spectrum.size() != window_len) {
    throw std::invalid_argument("idct2: spectrum length " + std::to_string(spectrum.size()) +
                                " does not match window length " + std::to_string(window_len));
  }
  if (!is_power_of_two(window_len)) throw std::invalid_argument("idct2: length not a power of two");
  if (!(spectrum.bin_spacing_hz > 0.0)) throw std::invalid_argument("idct2: bin spacing must be positive");
  require_finite(spectrum.coefficients, "idct2");
  SignalWindow w;
  w.samples = idct2(std::span<const double>(spectrum.coefficients));
  w.sample_rate_hz = spectrum.sample_rate_hz();
  return w;
}

inline SignalWindow idct2(const Spectrum& spectrum) { return idct2(spectrum, spectrum.size()); }

// ---------------------------------------------------------------------------
// Tapers

/// Periodic Hann window (the COLA-exact form at 50% hop).
inline std::vector<double> hann(std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (n <= 1) return w;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n));
  }
  return w;
}

inline std::vector<double> sqrt_hann(std::size_t n) {
  auto w = hann(n);
  for (double& v : w) v = std::sqrt(v);
  return w;
}

// ---------------------------------------------------------------------------
// Welch PSD

struct PsdEstimate {
  std::vector<double> freqs_hz;
  std::vector<double> power;  // amplitude^2 / Hz, one-sided

  std::size_t size() const { return power.size(); }
  double bin_width_hz() const { return freqs_hz.size() > 1 ? freqs_hz[1] - freqs_hz[0] : 0.0; }

  /// Rectangle-rule integral of the density over all bins.
  double total_power() const {
    double s = 0.0;
    for (double p : power) s += p;
    return s * bin_width_hz();
  }
};

struct WelchParams {
  std::size_t segment_len = 512;
  double overlap_fraction = 0.5;
};

/// Averaged one-sided periodogram over Hann-windowed, mean-removed,
/// overlapping segments. A unit-amplitude sine integrates to ~0.5.
inline PsdEstimate welch_psd(std::span<const double> signal, double sample_rate_hz,
                             const WelchParams& params = {}) {
  const std::size_t nseg = params.segment_len;
  if (!is_power_of_two(nseg)) throw std::invalid_argument("welch_psd: segment length must be a power of two");
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("welch_psd: sample rate must be positive");
  if (!(params.overlap_fraction >= 0.0 && params.overlap_fraction < 1.0)) {
    throw std::invalid_argument("welch_psd: overlap fraction must be in [0,1)");
  }
  if (signal.size() < nseg) throw std::invalid_argument("welch_psd: signal shorter than one segment");
  require_finite(signal, "welch_psd");

  const auto overlap = static_cast<std::size_t>(std::floor(static_cast<double>(nseg) * params.overlap_fraction));
  const std::size_t hop = std::max<std::size_t>(1, nseg - overlap);
  const std::size_t nfreq = nseg / 2 + 1;
  const auto window = hann(nseg);
  const double u = energy(window);
  const double scale = 1.0 / (sample_rate_hz * u);

  std::vector<double> acc(nfreq, 0.0);
  std::vector<std::complex<double>> buf(nseg);
  std::size_t count = 0;
  for (std::size_t start = 0; start + nseg <= signal.size(); start += hop) {
    const double m = mean(signal.subspan(start, nseg));
    for (std::size_t i = 0; i < nseg; ++i) buf[i] = (signal[start + i] - m) * window[i];
    detail::fft_inplace(buf, false);
    for (std::size_t k = 0; k < nfreq; ++k) {
      double p = std::norm(buf[k]) * scale;
      if (k != 0 && k != nseg / 2) p *= 2.0;
      acc[k] += p;
    }
    ++count;
  }

  PsdEstimate out;
  out.freqs_hz.resize(nfreq);
  out.power.resize(nfreq);
  for (std::size_t k = 0; k < nfreq; ++k) {
    out.freqs_hz[k] = static_cast<double>(k) * sample_rate_hz / static_cast<double>(nseg);
    out.power[k] = acc[k] / static_cast<double>(count);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hilbert envelope

struct Envelope {
  std::vector<double> values;
};

/// |analytic signal| via the FFT. Length must be even.
inline Envelope hilbert_envelope(std::span<const double> signal) {
  const std::size_t n = signal.size();
  if (n % 2 != 0) throw std::invalid_argument("hilbert_envelope: signal length must be even");
  Envelope env;
  if (n == 0) return env;
  require_finite(signal, "hilbert_envelope");
  auto buf = detail::fft_real(signal, n);
  for (std::size_t k = 1; k < n / 2; ++k) buf[k] *= 2.0;
  for (std::size_t k = n / 2 + 1; k < n; ++k) buf[k] = 0.0;
  detail::fft_inplace(buf, true);
  env.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) env.values[i] = std::abs(buf[i]) / static_cast<double>(n);
  return env;
}

// ---------------------------------------------------------------------------
// Autocorrelation

/// Biased, mean-removed autocorrelation for lags 0..max_lag, scaled so r(0) = 1.
inline std::vector<double> autocorr_norm(std::span<const double> signal, std::size_t max_lag) {
  const std::size_t n = signal.size();
  if (n == 0 || max_lag >= n) throw std::invalid_argument("autocorr_norm: max_lag must be below the signal length");
  require_finite(signal, "autocorr_norm");
  const double m = mean(signal);
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = signal[i] - m;
  const double r0 = energy(centered);
  if (!(r0 > 0.0)) throw std::invalid_argument("autocorr_norm: constant signal has zero variance");
  std::vector<double> r(max_lag + 1);
  r[0] = 1.0;
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += centered[t] * centered[t + lag];
    r[lag] = s / r0;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Morlet CWT

inline constexpr double kMorletOmega0 = 6.0;

/// Fourier frequency a Morlet scale (in seconds) responds to.
inline double morlet_frequency(double scale_s) {
  return kMorletOmega0 / (2.0 * std::numbers::pi * scale_s);
}

inline double morlet_scale(double frequency_hz) {
  return kMorletOmega0 / (2.0 * std::numbers::pi * frequency_hz);
}

/// 30 log-spaced scales whose centre frequencies span 10 Hz .. fs/4, ascending in scale.
inline std::vector<double> default_cwt_scales(double sample_rate_hz, std::size_t count = 30) {
  const double f_lo = 10.0;
  const double f_hi = sample_rate_hz / 4.0;
  if (!(f_hi > f_lo) || count < 2) throw std::invalid_argument("default_cwt_scales: sample rate too low");
  std::vector<double> scales(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(count - 1);
    const double f = f_hi * std::pow(f_lo / f_hi, t);
    scales[i] = morlet_scale(f);
  }
  return scales;
}

/// Scale x time magnitudes, row-major.
struct CwtTensor {
  std::vector<double> scales;
  std::size_t columns = 0;
  std::vector<double> coefficients;

  std::size_t rows() const { return scales.size(); }
  double at(std::size_t row, std::size_t col) const { return coefficients[row * columns + col]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(coefficients).subspan(r * columns, columns);
  }
};

namespace detail {

inline void check_cwt_scales(std::span<const double> scales, double sample_rate_hz) {
  if (scales.empty()) throw std::invalid_argument("cwt_morlet: empty scale list");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0)) throw std::invalid_argument("cwt_morlet: scales must be positive");
    if (i > 0 && !(scales[i] > scales[i - 1])) throw std::invalid_argument("cwt_morlet: scales must be ascending");
  }
  if (!(sample_rate_hz > 0.0)) throw std::invalid_argument("cwt_morlet: sample rate must be positive");
}

/// One CWT row from a precomputed length-m spectrum of an n-sample signal.
/// The wavelet is L1-normalised so a unit cosine at the matched scale has
/// magnitude ~1.
inline void morlet_row(const std::vector<std::complex<double>>& spectrum, std::size_t n, double sample_rate_hz,
                       double scale, std::vector<std::complex<double>>& buf, std::vector<double>& mag) {
  const std::size_t m = spectrum.size();
  buf.assign(m, std::complex<double>(0.0, 0.0));
  for (std::size_t k = 1; k < m / 2; ++k) {
    const double omega = 2.0 * std::numbers::pi * static_cast<double>(k) * sample_rate_hz / static_cast<double>(m);
    const double d = scale * omega - kMorletOmega0;
    if (d * d > 80.0) continue;
    buf[k] = spectrum[k] * (2.0 * std::exp(-0.5 * d * d));
  }
  fft_inplace(buf, true);
  mag.resize(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::abs(buf[i]) / static_cast<double>(m);
}

/// Zero-padded spectrum long enough that the convolution does not wrap.
inline std::vector<std::complex<double>> cwt_spectrum(std::span<const double> signal) {
  return fft_real(signal, next_power_of_two(2 * signal.size()));
}

}  // namespace detail

/// Morlet (omega0 = 6) CWT magnitudes computed by FFT convolution.
inline CwtTensor cwt_morlet(std::span<const double> signal, double sample_rate_hz,
                            std::span<const double> scales) {
  detail::check_cwt_scales(scales, sample_rate_hz);
  require_finite(signal, "cwt_morlet");
  CwtTensor t;
  t.scales.assign(scales.begin(), scales.end());
  t.columns = signal.size();
  t.coefficients.assign(scales.size() * signal.size(), 0.0);
  if (signal.empty()) return t;
  const auto spectrum = detail::cwt_spectrum(signal);
  std::vector<std::complex<double>> buf;
  std::vector<double> mag;
  for (std::size_t r = 0; r < scales.size(); ++r) {
    detail::morlet_row(spectrum, signal.size(), sample_rate_hz, scales[r], buf, mag);
    std::copy(mag.begin(), mag.end(), t.coefficients.begin() + static_cast<std::ptrdiff_t>(r * t.columns));
  }
  return t;
}

// ---------------------------------------------------------------------------
// Band-pass

/// Zero-phase band-pass applied in the frequency domain with the magnitude
/// response of a 4th-order Butterworth band-pass (2nd-order prototype).
/// Edges must satisfy 0 < low < high <= fs/2.
inline std::vector<double> bandpass_zero_phase(std::span<const double> signal, double sample_rate_hz,
                                               double low_hz, double high_hz) {
  const double nyquist = sample_rate_hz / 2.0;
  if (!(low_hz > 0.0 && low_hz < high_hz && high_hz <= nyquist)) {
    throw std::invalid_argument("bandpass_zero_phase: edges must satisfy 0 < low < high <= Nyquist");
  }
  const std::size_t n = signal.size();
  if (n == 0) return {};
  auto buf = detail::fft_real(signal, n);
  const double f0sq = low_hz * high_hz;
  const double bw = high_hz - low_hz;
  constexpr int kPrototypeOrder = 2;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t kk = std::min(k, n - k);
    const double f = static_cast<double>(kk) * sample_rate_hz / static_cast<double>(n);
    double gain = 0.0;
    if (f > 0.0) {
      const double ratio = (f * f - f0sq) / (f * bw);
      gain = 1.0 / std::sqrt(1.0 + std::pow(ratio, 2 * kPrototypeOrder));
    }
    buf[k] *= gain;
  }
  detail::fft_inplace(buf, true);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real() / static_cast<double>(n);
  return out;
}

}  // namespace vibcodec
