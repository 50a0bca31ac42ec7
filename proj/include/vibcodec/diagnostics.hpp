#pragma once

// Downstream check: spectral band features and a nearest-centroid classifier
// used to see whether compression keeps the information a fault detector needs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vibcodec/dsp.hpp"
#include "vibcodec/harmonic.hpp"
#include "vibcodec/metrics.hpp"

namespace vibcodec {

/// Fixed-order features: per-carrier band energies, per-sideband band
/// energies (map order), scr_consistency, scr_sideband, rms, kurtosis.
struct FeatureVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

inline std::size_t feature_count(const HarmonicMap& map) { return map.center_count() + 4; }

/// Non-excess kurtosis (4th standardized moment; 3 for a Gaussian).
inline double kurtosis(std::span<const double> x) {
  const double m = mean(x);
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = (v - m) * (v - m);
    m2 += d;
    m4 += d * d;
  }
  if (x.empty() || !(m2 > 0.0)) throw std::invalid_argument("kurtosis: zero variance");
  const double n = static_cast<double>(x.size());
  return (m4 / n) / ((m2 / n) * (m2 / n));
}

/// One Welch segment spanning the largest power of two that fits. Shaft
/// sidebands sit a few tens of Hz from their carriers, so a classifier working
/// on single windows needs the finest resolution the window allows.
inline WelchParams feature_welch(std::size_t signal_len) {
  if (signal_len == 0) throw std::invalid_argument("feature_welch: empty signal");
  std::size_t seg = 1;
  while (seg * 2 <= signal_len) seg *= 2;
  return {seg, 0.5};
}

inline FeatureVector extract_features(std::span<const double> signal, double sample_rate_hz, const HarmonicMap& map,
                                      const std::optional<WelchParams>& welch = std::nullopt) {
  const double k = kurtosis(signal);
  const auto psd = welch_psd(signal, sample_rate_hz, welch.value_or(feature_welch(signal.size())));
  FeatureVector f;
  f.values = band_energies_per_center(psd, map);
  double carrier = 0.0, sideband = 0.0;
  for (std::size_t c = 0; c < f.values.size(); ++c) (c < map.carriers_hz.size() ? carrier : sideband) += f.values[c];
  const double broadband = psd.total_power();
  f.values.push_back(broadband > 0.0 ? (carrier + sideband) / broadband : 0.0);
  f.values.push_back(carrier > 0.0 ? sideband / carrier : 0.0);
  f.values.push_back(rms(signal));
  f.values.push_back(k);
  return f;
}

struct LabeledFeatures {
  std::string label;
  FeatureVector features;
};

/// Nearest centroid on z-scored features. Labels are kept sorted so ties
/// resolve toward the lexicographically smaller label.
struct CentroidModel {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> centroids;  // z-scored, one per label
  std::vector<double> feature_mean;
  std::vector<double> feature_std;

  std::size_t feature_len() const { return feature_mean.size(); }
};

namespace detail {

/// Order-independent sum: values are sorted before accumulation.
inline double sorted_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

inline std::vector<double> zscore(const CentroidModel& m, const FeatureVector& f) {
  if (f.size() != m.feature_len()) {
    throw std::invalid_argument("predict: feature length " + std::to_string(f.size()) + " does not match the model (" +
                                std::to_string(m.feature_len()) + ")");
  }
  std::vector<double> z(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) z[i] = (f.values[i] - m.feature_mean[i]) / m.feature_std[i];
  return z;
}

}  // namespace detail

inline CentroidModel fit_centroids(std::span<const LabeledFeatures> data) {
  if (data.empty()) throw std::invalid_argument("fit_centroids: empty training set");
  const std::size_t d = data.front().features.size();
  for (const auto& s : data) {
    if (s.features.size() != d) throw std::invalid_argument("fit_centroids: inconsistent feature lengths");
    if (s.label.empty()) throw std::invalid_argument("fit_centroids: empty label");
  }
  CentroidModel m;
  m.feature_mean.resize(d);
  m.feature_std.resize(d);
  const double n = static_cast<double>(data.size());
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> col;
    col.reserve(data.size());
    for (const auto& s : data) col.push_back(s.features.values[j]);
    const double mu = detail::sorted_sum(col) / n;
    for (double& v : col) v = (v - mu) * (v - mu);
    const double sd = std::sqrt(detail::sorted_sum(col) / n);
    m.feature_mean[j] = mu;
    m.feature_std[j] = sd > 0.0 ? sd : 1.0;
  }

  std::map<std::string, std::vector<std::vector<double>>> groups;
  for (const auto& s : data) groups[s.label].push_back(detail::zscore(m, s.features));
  for (const auto& [label, rows] : groups) {
    std::vector<double> c(d);
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<double> col;
      col.reserve(rows.size());
      for (const auto& r : rows) col.push_back(r[j]);
      c[j] = detail::sorted_sum(std::move(col)) / static_cast<double>(rows.size());
    }
    m.labels.push_back(label);
    m.centroids.push_back(std::move(c));
  }
  return m;
}

inline std::string predict(const CentroidModel& m, const FeatureVector& f) {
  if (m.labels.empty()) throw std::invalid_argument("predict: model has no classes");
  const auto z = detail::zscore(m, f);
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < m.centroids.size(); ++c) {
    double dist = 0.0;
    for (std::size_t j = 0; j < z.size(); ++j) dist += (z[j] - m.centroids[c][j]) * (z[j] - m.centroids[c][j]);
    if (dist < best_d) {
      best_d = dist;
      best = c;
    }
  }
  return m.labels[best];
}

inline double accuracy(const CentroidModel& m, std::span<const FeatureVector> features,
                       std::span<const std::string> labels) {
  if (features.empty()) throw std::invalid_argument("accuracy: empty evaluation set");
  if (features.size() != labels.size()) throw std::invalid_argument("accuracy: feature and label counts differ");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < features.size(); ++i) hits += predict(m, features[i]) == labels[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(features.size());
}

struct AccuracyPair {
  double original = 0.0;
  double reconstructed = 0.0;
};

inline AccuracyPair accuracy_delta(const CentroidModel& m, std::span<const FeatureVector> originals,
                                   std::span<const FeatureVector> reconstructions, std::span<const std::string> labels) {
  if (originals.size() != reconstructions.size()) {
    throw std::invalid_argument("accuracy_delta: original and reconstruction counts differ");
  }
  return {accuracy(m, originals, labels), accuracy(m, reconstructions, labels)};
}

inline void to_json(nlohmann::json& j, const CentroidModel& m) {
  j = nlohmann::json{{"labels", m.labels},
                     {"centroids", m.centroids},
                     {"feature_mean", m.feature_mean},
                     {"feature_std", m.feature_std}};
}

inline void from_json(const nlohmann::json& j, CentroidModel& m) {
  j.at("labels").get_to(m.labels);
  j.at("centroids").get_to(m.centroids);
  j.at("feature_mean").get_to(m.feature_mean);
  j.at("feature_std").get_to(m.feature_std);
  if (m.centroids.size() != m.labels.size() || m.feature_std.size() != m.feature_mean.size()) {
    throw std::invalid_argument("CentroidModel: inconsistent JSON");
  }
  for (const auto& c : m.centroids) {
    if (c.size() != m.feature_mean.size()) throw std::invalid_argument("CentroidModel: inconsistent JSON");
  }
  if (!std::is_sorted(m.labels.begin(), m.labels.end())) throw std::invalid_argument("CentroidModel: labels must be sorted");
}

}  // namespace vibcodec
