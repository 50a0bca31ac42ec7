#pragma once

// Signal sources: the synthetic gearbox generator, CSV / WAV ingestion,
// dataset manifests and fixed-hop segmentation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "vibcodec/dsp.hpp"
#include "vibcodec/harmonic.hpp"

namespace vibcodec {

// ---------------------------------------------------------------------------
// Synthetic gearbox signals

struct FaultProfile {
  std::vector<double> harmonic_amplitudes{1.0, 0.5, 0.25};
  double sideband_mod_index = 0.0;
  /// Signal-to-noise ratio of the additive white noise; +inf disables it.
  double noise_snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;

  void validate() const {
    if (harmonic_amplitudes.empty()) throw std::invalid_argument("FaultProfile: need at least one harmonic");
    for (double a : harmonic_amplitudes) {
      if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("FaultProfile: amplitudes must be nonnegative");
    }
    if (!(sideband_mod_index >= 0.0) || !std::isfinite(sideband_mod_index)) {
      throw std::invalid_argument("FaultProfile: modulation index must be nonnegative");
    }
    if (std::isnan(noise_snr_db)) throw std::invalid_argument("FaultProfile: noise SNR is NaN");
  }
};

namespace detail {

/// Uniform [0,1) from the top 53 bits; stable across standard libraries.
inline double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Box-Muller normal deviates (one per call, the pair's second half discarded).
inline double unit_normal(std::mt19937_64& rng) {
  double u1 = unit_uniform(rng);
  while (u1 <= 0.0) u1 = unit_uniform(rng);
  const double u2 = unit_uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace detail

/// sum_m A_m (1 + mu cos(2 pi f_shaft t)) cos(2 pi m GMF t + phi_m) + white noise.
/// Phases and noise come from `profile.seed`.
inline std::vector<double> synth_gear(const KinematicSpec& spec, const FaultProfile& profile, double duration_s,
                                      double sample_rate_hz) {
  profile.validate();
  if (!(spec.shaft_rpm > 0.0) || spec.pinion_teeth <= 0) throw std::invalid_argument("synth_gear: invalid kinematics");
  if (!(duration_s >= 0.0) || !(sample_rate_hz > 0.0)) throw std::invalid_argument("synth_gear: invalid duration or rate");
  const double gmf = spec.gear_mesh_hz();
  const double shaft = spec.shaft_hz();
  const auto m_count = profile.harmonic_amplitudes.size();
  if (!(sample_rate_hz > 2.0 * static_cast<double>(m_count) * gmf)) {
    throw std::invalid_argument("synth_gear: sample rate must exceed twice the highest harmonic (Nyquist)");
  }

  std::mt19937_64 rng(profile.seed);
  std::vector<double> phases(m_count);
  for (auto& p : phases) p = 2.0 * std::numbers::pi * detail::unit_uniform(rng);

  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
  const double mu = profile.sideband_mod_index;
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / sample_rate_hz;
    const double am = 1.0 + mu * std::cos(2.0 * std::numbers::pi * shaft * t);
    double v = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) {
      v += profile.harmonic_amplitudes[m] *
           std::cos(2.0 * std::numbers::pi * static_cast<double>(m + 1) * gmf * t + phases[m]);
    }
    x[i] = am * v;
  }

  if (std::isfinite(profile.noise_snr_db)) {
    double p_sig = 0.0;
    for (double a : profile.harmonic_amplitudes) p_sig += 0.5 * a * a;
    p_sig *= 1.0 + 0.5 * mu * mu;
    const double sigma = std::sqrt(p_sig / std::pow(10.0, profile.noise_snr_db / 10.0));
    for (auto& v : x) v += sigma * detail::unit_normal(rng);
  }
  return x;
}

/// The four-class desk-scale corpus: healthy plus three faults with growing
/// shaft-rate modulation and a boosted third harmonic.
struct CorpusClass {
  std::string label;
  FaultProfile profile;
};

struct CorpusConfig {
  double sample_rate_hz = 20000.0;
  std::size_t window_len = kDefaultWindowLen;
  std::size_t windows_per_class = 250;
  double noise_snr_db = 20.0;
  std::uint64_t seed = 1;
};

inline std::vector<CorpusClass> default_corpus_classes(const CorpusConfig& cfg) {
  const std::vector<double> healthy{1.0, 0.5, 0.25};
  const std::vector<double> boosted{1.0, 0.5, 0.6};
  std::vector<CorpusClass> classes{
      {"healthy", {healthy, 0.0, cfg.noise_snr_db, 0}},
      {"fault_1", {boosted, 0.15, cfg.noise_snr_db, 0}},
      {"fault_2", {boosted, 0.3, cfg.noise_snr_db, 0}},
      {"fault_3", {boosted, 0.6, cfg.noise_snr_db, 0}},
  };
  for (std::size_t i = 0; i < classes.size(); ++i) classes[i].profile.seed = cfg.seed * 1000003ULL + i;
  return classes;
}

inline KinematicSpec default_kinematics(double sample_rate_hz = 20000.0, std::size_t window_len = kDefaultWindowLen) {
  KinematicSpec k;
  k.band_half_width_hz = default_band_half_width(sample_rate_hz, window_len);
  return k;
}

// ---------------------------------------------------------------------------
// Segmentation

/// floor((len - window_len) / hop) + 1 windows, each tagged with its start offset.
inline std::vector<SignalWindow> segment(std::span<const double> signal, double sample_rate_hz,
                                         std::size_t window_len, std::size_t hop) {
  if (window_len == 0 || hop == 0) throw std::invalid_argument("segment: window length and hop must be positive");
  std::vector<SignalWindow> out;
  if (signal.size() < window_len) return out;
  const std::size_t count = (signal.size() - window_len) / hop + 1;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    SignalWindow w;
    w.start_index = i * hop;
    w.samples.assign(signal.begin() + static_cast<std::ptrdiff_t>(w.start_index),
                     signal.begin() + static_cast<std::ptrdiff_t>(w.start_index + window_len));
    w.sample_rate_hz = sample_rate_hz;
    out.push_back(std::move(w));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

/// Column selector: zero-based index or header name.
using CsvColumn = std::variant<std::size_t, std::string>;

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  for (auto& f : fields) {
    const auto b = f.find_first_not_of(" \t");
    const auto e = f.find_last_not_of(" \t");
    f = b == std::string::npos ? std::string() : f.substr(b, e - b + 1);
  }
  return fields;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

}  // namespace detail

/// One numeric column; the first row is treated as a header when the
/// selected field does not parse as a number. NaN / unparsable rows are
/// rejected with their 1-based line number.
inline std::vector<double> load_csv(const std::filesystem::path& path, const CsvColumn& column = std::size_t{0}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path.string());
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t col = std::holds_alternative<std::size_t>(column) ? std::get<std::size_t>(column) : 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_csv_line(line);
    if (first) {
      first = false;
      if (std::holds_alternative<std::string>(column)) {
        const auto& name = std::get<std::string>(column);
        auto it = std::find(fields.begin(), fields.end(), name);
        if (it == fields.end()) throw std::runtime_error("load_csv: column '" + name + "' not found in header");
        col = static_cast<std::size_t>(it - fields.begin());
        continue;
      }
      double probe = 0.0;
      if (col < fields.size() && !detail::parse_double(fields[col], probe)) continue;
    }
    if (col >= fields.size()) {
      throw std::runtime_error("load_csv: line " + std::to_string(line_no) + " has no column " + std::to_string(col));
    }
    double v = 0.0;
    if (!detail::parse_double(fields[col], v) || !std::isfinite(v)) {
      throw std::runtime_error("load_csv: line " + std::to_string(line_no) + ": invalid value '" + fields[col] + "'");
    }
    out.push_back(v);
  }
  return out;
}

/// One sample per row under a `value` header, printed round-trip exact.
inline void write_csv(const std::filesystem::path& path, std::span<const double> samples) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path.string());
  out.precision(17);
  out << "value\n";
  for (double v : samples) out << v << '\n';
  if (!out) throw std::runtime_error("write_csv: write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// WAV

struct WavData {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;
};

namespace detail {

inline std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
inline std::uint16_t le16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

}  // namespace detail

/// RIFF/WAVE with 16-bit integer or 32-bit float PCM. Multi-channel files
/// yield channel 0; integer samples are scaled to [-1, 1).
inline WavData load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_wav: cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw std::runtime_error("load_wav: " + path.string() + " is not a RIFF/WAVE file");
  }
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  const std::uint8_t* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::size_t len = detail::le32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min(len, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0 && avail >= 16) {
      format = detail::le16(chunk + 8);
      channels = detail::le16(chunk + 10);
      rate = detail::le32(chunk + 12);
      bits = detail::le16(chunk + 22);
      if (format == 0xFFFE && avail >= 26) format = detail::le16(chunk + 32);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_len = avail;
    }
    pos = body + len + (len & 1u);
  }
  if (channels == 0 || rate == 0) throw std::runtime_error("load_wav: missing or invalid fmt chunk");
  const bool pcm16 = format == 1 && bits == 16;
  const bool float32 = format == 3 && bits == 32;
  if (!pcm16 && !float32) throw std::runtime_error("load_wav: only 16-bit PCM and 32-bit float are supported");
  const std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
  if (data == nullptr || data_len < frame_bytes) throw std::runtime_error("load_wav: no samples in " + path.string());

  WavData out;
  out.sample_rate_hz = rate;
  const std::size_t frames = data_len / frame_bytes;
  out.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const std::uint8_t* p = data + i * frame_bytes;
    if (pcm16) {
      out.samples[i] = static_cast<std::int16_t>(detail::le16(p)) / 32768.0;
    } else {
      float f = 0.0f;
      const std::uint32_t u = detail::le32(p);
      std::memcpy(&f, &u, sizeof f);
      out.samples[i] = f;
    }
  }
  return out;
}

enum class WavEncoding { pcm16, float32 };

inline void write_wav(const std::filesystem::path& path, std::span<const double> samples, std::uint32_t sample_rate_hz,
                      WavEncoding enc = WavEncoding::float32) {
  const std::uint16_t bits = enc == WavEncoding::pcm16 ? 16 : 32;
  const std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * (bits / 8));
  std::vector<std::uint8_t> b;
  auto put = [&](const void* p, std::size_t n) {
    const auto* c = static_cast<const std::uint8_t*>(p);
    b.insert(b.end(), c, c + n);
  };
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto u16 = [&](std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  put("RIFF", 4);
  u32(36 + data_len);
  put("WAVEfmt ", 8);
  u32(16);
  u16(enc == WavEncoding::pcm16 ? 1 : 3);
  u16(1);
  u32(sample_rate_hz);
  u32(sample_rate_hz * (bits / 8));
  u16(bits / 8);
  u16(bits);
  put("data", 4);
  u32(data_len);
  for (double v : samples) {
    if (enc == WavEncoding::pcm16) {
      const double s = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
      u16(static_cast<std::uint16_t>(static_cast<std::int16_t>(s)));
    } else {
      const auto f = static_cast<float>(v);
      std::uint32_t u = 0;
      std::memcpy(&u, &f, sizeof u);
      u32(u);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_wav: cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw std::runtime_error("write_wav: write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// Manifest

inline constexpr const char* kManifestHeader = "# vibcodec manifest v1";

struct ManifestEntry {
  std::filesystem::path path;
  std::string label;
  double sample_rate_hz = 0.0;
  std::size_t channel = 0;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

/// Lines of `path,label,rate,channel`; `#` starts a comment. Relative paths
/// resolve against the manifest's directory.
inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_manifest: cannot open " + path.string());
  DatasetManifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    const auto f = detail::split_csv_line(line);
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (f.size() != 4) throw std::runtime_error("read_manifest: " + where + ": expected path,label,rate,channel");
    ManifestEntry e;
    e.path = f[0];
    if (e.path.is_relative()) e.path = path.parent_path() / e.path;
    e.label = f[1];
    if (e.label.empty()) throw std::runtime_error("read_manifest: " + where + ": empty label");
    double ch = 0.0;
    if (!detail::parse_double(f[2], e.sample_rate_hz) || !(e.sample_rate_hz > 0.0)) {
      throw std::runtime_error("read_manifest: " + where + ": invalid sample rate");
    }
    if (!detail::parse_double(f[3], ch) || ch < 0.0 || ch != std::floor(ch)) {
      throw std::runtime_error("read_manifest: " + where + ": invalid channel");
    }
    e.channel = static_cast<std::size_t>(ch);
    m.entries.push_back(std::move(e));
  }
  return m;
}

/// Absolute paths are written relative to the manifest's directory when possible.
inline void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_manifest: cannot open " + path.string());
  out << kManifestHeader << '\n';
  for (const auto& e : m.entries) {
    auto p = e.path;
    if (p.is_absolute()) {
      std::error_code ec;
      auto rel = std::filesystem::relative(p, path.parent_path().empty() ? "." : path.parent_path(), ec);
      if (!ec && !rel.empty()) p = rel;
    }
    out << p.generic_string() << ',' << e.label << ',' << e.sample_rate_hz << ',' << e.channel << '\n';
  }
  if (!out) throw std::runtime_error("write_manifest: write failed for " + path.string());
}

/// Loads a manifest entry's signal from WAV or CSV (by extension).
inline std::vector<double> load_entry(const ManifestEntry& e) {
  const auto ext = e.path.extension().string();
  if (ext == ".wav" || ext == ".WAV") {
    if (e.channel != 0) throw std::runtime_error("load_entry: only channel 0 is supported for WAV input");
    return load_wav(e.path).samples;
  }
  return load_csv(e.path, e.channel);
}

}  // namespace vibcodec
