#pragma once

// Tool configuration: a small TOML-style subset (sections, key = value,
// numbers, quoted strings, booleans and flat arrays) mapped onto the codec,
// corpus and benchmark settings.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vibcodec/data.hpp"
#include "vibcodec/encoder.hpp"
#include "vibcodec/harmonic.hpp"

namespace vibcodec {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw parsed values; arrays hold their elements as unparsed scalars.
struct ConfigValue {
  std::vector<std::string> items;
  bool is_array = false;
  std::size_t line = 0;
};

using ConfigTable = std::map<std::string, std::map<std::string, ConfigValue>>;

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Removes a trailing # comment that is not inside a quoted string.
inline std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

inline std::string unquote(const std::string& s, std::size_t line) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  if (!s.empty() && (s.front() == '"' || s.back() == '"')) {
    throw ConfigError("line " + std::to_string(line) + ": unterminated string");
  }
  return s;
}

}  // namespace detail

inline ConfigTable parse_config(std::istream& in) {
  ConfigTable t;
  std::string section;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto s = detail::trim(detail::strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) throw ConfigError("line " + std::to_string(line) + ": malformed section header");
      section = detail::trim(s.substr(1, s.size() - 2));
      t[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line) + ": expected key = value");
    const auto key = detail::trim(s.substr(0, eq));
    const auto val = detail::trim(s.substr(eq + 1));
    if (key.empty() || val.empty()) throw ConfigError("line " + std::to_string(line) + ": empty key or value");
    if (section.empty()) throw ConfigError("line " + std::to_string(line) + ": key outside any section");
    ConfigValue v;
    v.line = line;
    if (val.front() == '[') {
      if (val.back() != ']') throw ConfigError("line " + std::to_string(line) + ": unterminated array");
      v.is_array = true;
      std::stringstream items(val.substr(1, val.size() - 2));
      std::string item;
      while (std::getline(items, item, ',')) {
        item = detail::trim(item);
        if (!item.empty()) v.items.push_back(detail::unquote(item, line));
      }
    } else {
      v.items.push_back(detail::unquote(val, line));
    }
    if (!t[section].emplace(key, std::move(v)).second) {
      throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
    }
  }
  return t;
}

inline ConfigTable parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  return parse_config(in);
}

/// Everything the tools can configure. Each field has the library default.
struct ToolConfig {
  KinematicSpec kinematics = default_kinematics();
  bool band_half_width_set = false;
  EncodeConfig encode{};
  CorpusConfig corpus{};
  std::vector<double> bench_crs{4, 8, 16, 32, 64};
  std::vector<std::string> bench_codecs{"epicmt", "dct", "pca", "no-hpq", "no-sats"};
  std::uint64_t seed = 1;
};

namespace detail {

class ConfigReader {
 public:
  explicit ConfigReader(const ConfigTable& t) : t_(t) {}

  const ConfigValue* find(const std::string& sec, const std::string& key) {
    seen_.insert(sec + "." + key);
    auto s = t_.find(sec);
    if (s == t_.end()) return nullptr;
    auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
  }

  template <class F>
  void scalar(const std::string& sec, const std::string& key, F&& apply) {
    if (const auto* v = find(sec, key)) {
      if (v->is_array) fail(*v, sec, key, "expected a scalar");
      try {
        apply(v->items.front());
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        fail(*v, sec, key, e.what());
      }
    }
  }

  template <class F>
  void array(const std::string& sec, const std::string& key, F&& apply) {
    if (const auto* v = find(sec, key)) {
      if (!v->is_array) fail(*v, sec, key, "expected an array");
      try {
        apply(v->items);
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        fail(*v, sec, key, e.what());
      }
    }
  }

  /// Rejects keys nobody asked for, which are almost always typos.
  void reject_unknown() const {
    for (const auto& [sec, keys] : t_) {
      for (const auto& [key, v] : keys) {
        if (!seen_.count(sec + "." + key)) fail(v, sec, key, "unknown key");
      }
    }
  }

 private:
  [[noreturn]] static void fail(const ConfigValue& v, const std::string& sec, const std::string& key,
                                const std::string& why) {
    throw ConfigError("line " + std::to_string(v.line) + ": [" + sec + "] " + key + ": " + why);
  }

  const ConfigTable& t_;
  std::set<std::string> seen_;
};

inline double to_double(const std::string& s) {
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("not a number: " + s);
  return v;
}

inline long long to_int(const std::string& s) {
  std::size_t pos = 0;
  const long long v = std::stoll(s, &pos);
  if (pos != s.size()) throw std::invalid_argument("not an integer: " + s);
  return v;
}

inline std::size_t to_size(const std::string& s) {
  const auto v = to_int(s);
  if (v < 0) throw std::invalid_argument("must be nonnegative");
  return static_cast<std::size_t>(v);
}

inline bool to_bool(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw std::invalid_argument("expected true or false");
}

}  // namespace detail

/// Applies a parsed table to the defaults and validates the result.
inline ToolConfig make_tool_config(const ConfigTable& t) {
  ToolConfig c;
  detail::ConfigReader r(t);
  using detail::to_double;
  using detail::to_size;

  auto& k = c.kinematics;
  r.scalar("kinematics", "shaft_rpm", [&](auto& v) { k.shaft_rpm = to_double(v); });
  r.scalar("kinematics", "pinion_teeth", [&](auto& v) { k.pinion_teeth = static_cast<int>(detail::to_int(v)); });
  r.scalar("kinematics", "n_harmonics", [&](auto& v) { k.n_harmonics = static_cast<int>(detail::to_int(v)); });
  r.scalar("kinematics", "n_sidebands", [&](auto& v) { k.n_sidebands_per_harmonic = static_cast<int>(detail::to_int(v)); });
  r.scalar("kinematics", "band_half_width_hz", [&](auto& v) {
    k.band_half_width_hz = to_double(v);
    c.band_half_width_set = true;
  });

  auto& e = c.encode;
  r.scalar("quant", "token_len", [&](auto& v) { e.token_len = to_size(v); });
  r.scalar("quant", "delta0", [&](auto& v) { e.delta0 = to_double(v); });
  r.scalar("quant", "alpha", [&](auto& v) { e.alpha = to_double(v); });
  r.scalar("quant", "fine_bits", [&](auto& v) { e.fine_bits = static_cast<int>(detail::to_int(v)); });
  r.scalar("quant", "coarse_bits", [&](auto& v) { e.coarse_bits = static_cast<int>(detail::to_int(v)); });
  r.scalar("quant", "budget_bits", [&](auto& v) { e.budget = BitBudget{static_cast<std::uint64_t>(to_size(v))}; });
  r.scalar("quant", "cr", [&](auto& v) { e.compression_ratio = to_double(v); });
  r.scalar("quant", "refine_hint", [&](auto& v) { e.refinement_hint = detail::to_bool(v); });

  r.array("scorer", "w", [&](auto& items) {
    if (items.size() != kTokenFeatureCount) throw std::invalid_argument("expected 3 weights");
    for (std::size_t i = 0; i < kTokenFeatureCount; ++i) e.weights.w[i] = to_double(items[i]);
  });
  r.scalar("scorer", "b", [&](auto& v) { e.weights.b = to_double(v); });

  auto& cp = c.corpus;
  r.scalar("corpus", "sample_rate_hz", [&](auto& v) { cp.sample_rate_hz = to_double(v); });
  r.scalar("corpus", "window_len", [&](auto& v) { cp.window_len = to_size(v); });
  r.scalar("corpus", "windows_per_class", [&](auto& v) { cp.windows_per_class = to_size(v); });
  r.scalar("corpus", "noise_snr_db", [&](auto& v) { cp.noise_snr_db = to_double(v); });
  r.scalar("corpus", "seed", [&](auto& v) { cp.seed = static_cast<std::uint64_t>(to_size(v)); });

  r.array("bench", "crs", [&](auto& items) {
    c.bench_crs.clear();
    for (const auto& s : items) c.bench_crs.push_back(to_double(s));
  });
  r.array("bench", "codecs", [&](auto& items) { c.bench_codecs = items; });
  r.scalar("bench", "seed", [&](auto& v) { c.seed = static_cast<std::uint64_t>(to_size(v)); });
  r.reject_unknown();

  try {
    if (!c.band_half_width_set) k.band_half_width_hz = default_band_half_width(cp.sample_rate_hz, cp.window_len);
    k.validate();
    e.weights.validate();
    QuantParams{e.delta0.value_or(1.0), e.alpha, e.fine_bits, e.coarse_bits}.validate();
    if (e.token_len == 0 || !(e.compression_ratio >= 1.0)) throw std::invalid_argument("token_len and cr must be positive");
    if (!is_power_of_two(cp.window_len) || !(cp.sample_rate_hz > 0.0) || cp.windows_per_class == 0) {
      throw std::invalid_argument("corpus: window_len must be a power of two and rate/count positive");
    }
    if (c.bench_crs.empty() || c.bench_codecs.empty()) throw std::invalid_argument("bench: crs and codecs must be non-empty");
    for (double cr : c.bench_crs) {
      if (!(cr >= 1.0)) throw std::invalid_argument("bench: every cr must be >= 1");
    }
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(ex.what());
  }
  return c;
}

inline ToolConfig load_tool_config(const std::filesystem::path& path) { return make_tool_config(parse_config_file(path)); }

}  // namespace vibcodec
