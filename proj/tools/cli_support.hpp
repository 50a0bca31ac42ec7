#pragma once

// Shared plumbing for the command-line tool: exit codes, error types that map
// onto them, and signal file I/O chosen by extension.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vibcodec/vibcodec.hpp"

namespace vibcodec::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kInfeasible = 3, kIo = 4 };

/// File system or format problems; mapped to exit code 4.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad flag values or combinations; mapped to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadedSignal {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;
};

inline bool has_extension(const std::filesystem::path& p, const char* ext) {
  auto e = p.extension().string();
  for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e == ext;
}

/// WAV carries its own rate; CSV needs `csv_rate_hz`.
inline LoadedSignal load_signal(const std::filesystem::path& path, double csv_rate_hz, std::size_t csv_column = 0) {
  try {
    if (has_extension(path, ".wav")) {
      auto w = load_wav(path);
      return {std::move(w.samples), w.sample_rate_hz};
    }
    if (!(csv_rate_hz > 0.0)) throw UsageError("CSV input needs a positive --rate");
    return {load_csv(path, csv_column), csv_rate_hz};
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
}

inline void save_signal(const std::filesystem::path& path, const std::vector<double>& samples, double sample_rate_hz) {
  try {
    if (has_extension(path, ".wav")) {
      write_wav(path, samples, static_cast<std::uint32_t>(std::lround(sample_rate_hz)));
    } else {
      write_csv(path, samples);
    }
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
}

inline std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

/// The band map of the configured kinematics at a given rate and window.
/// The default half width follows the window's bin spacing unless set.
inline BandClassification classification_for(const ToolConfig& cfg, double sample_rate_hz, std::size_t window_len) {
  auto spec = cfg.kinematics;
  if (!cfg.band_half_width_set) spec.band_half_width_hz = default_band_half_width(sample_rate_hz, window_len);
  return classify_bins(derive_harmonics(spec), window_len, sample_rate_hz);
}

inline HarmonicMap harmonic_map_for(const ToolConfig& cfg, double sample_rate_hz, std::size_t window_len) {
  auto spec = cfg.kinematics;
  if (!cfg.band_half_width_set) spec.band_half_width_hz = default_band_half_width(sample_rate_hz, window_len);
  return derive_harmonics(spec);
}

}  // namespace vibcodec::cli
