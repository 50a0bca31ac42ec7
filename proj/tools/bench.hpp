#pragma once

// Compression-ratio sweep over a dataset manifest. Every (codec, CR, file)
// cell runs the stream path (50% hop, sqrt-Hann taper), decodes through the
// wire format, and scores the stream interior against the original.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "cli_support.hpp"
#include "svg_plot.hpp"
#include "vibcodec/vibcodec.hpp"

namespace vibcodec::cli {

inline const std::vector<std::string>& known_codecs() {
  static const std::vector<std::string> names{"epicmt", "dct", "pca", "cs", "no-hpq", "no-sats"};
  return names;
}

inline constexpr const char* kCsNote =
    "cs keeps a seeded random subset of DCT coefficients decoded by inverse DCT; no iterative sparse solver";

struct BenchOptions {
  std::vector<double> crs;
  std::vector<std::string> codecs;
  std::uint64_t seed = 1;
  bool timing = true;
  std::size_t jobs = 1;
};

struct BenchRow {
  std::string codec;
  double cr = 0.0;
  std::string file;
  std::size_t window = 0;
  std::uint64_t bits = 0;
  std::size_t frames = 0;
  MetricsReport report;
  double encode_us = 0.0;
  double decode_us = 0.0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
  std::vector<std::string> notes;
};

namespace detail {

struct BenchFile {
  std::string name;  // as listed in the manifest, relative where possible
  std::vector<double> samples;
  double sample_rate_hz = 0.0;
  std::uint64_t seed = 0;
};

/// FNV-1a, so per-file seeds depend on the name and not on scheduling.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::vector<SignalWindow> tapered_windows(const BenchFile& f, std::size_t n) {
  auto ws = segment(f.samples, f.sample_rate_hz, n, n / 2);
  for (auto& w : ws) w = analysis_taper(std::move(w));
  return ws;
}

inline std::size_t pca_components(std::size_t n, double cr) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) / (2.0 * cr))));
}

inline std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace detail

/// Runs the sweep. Throws UsageError for unknown codecs, IoError for
/// unreadable inputs and BudgetInfeasible if an equal-bits ablation cannot fit.
inline BenchResult run_bench(const DatasetManifest& manifest, const std::filesystem::path& manifest_path,
                             const ToolConfig& cfg, const BenchOptions& opt) {
  for (const auto& c : opt.codecs) {
    if (std::find(known_codecs().begin(), known_codecs().end(), c) == known_codecs().end()) {
      throw UsageError("unknown codec '" + c + "'");
    }
  }
  if (opt.crs.empty() || opt.codecs.empty()) throw UsageError("bench needs at least one codec and one CR");
  for (double cr : opt.crs) {
    if (!(cr >= 1.0)) throw UsageError("every CR must be >= 1");
  }
  if (manifest.entries.empty()) throw IoError("manifest lists no files");

  const std::size_t n = cfg.corpus.window_len;
  std::vector<detail::BenchFile> files;
  for (const auto& e : manifest.entries) {
    detail::BenchFile f;
    std::error_code ec;
    auto rel = std::filesystem::relative(e.path, manifest_path.parent_path().empty() ? "." : manifest_path.parent_path(), ec);
    f.name = (!ec && !rel.empty()) ? rel.generic_string() : e.path.generic_string();
    try {
      f.samples = load_entry(e);
    } catch (const std::exception& ex) {
      throw IoError(ex.what());
    }
    f.sample_rate_hz = e.sample_rate_hz;
    f.seed = detail::mix_seed(opt.seed, detail::fnv1a(f.name));
    if (f.samples.size() < 2 * n) throw IoError(f.name + ": shorter than two windows");
    files.push_back(std::move(f));
  }

  // Per-rate harmonic maps and band classifications.
  std::map<double, std::pair<HarmonicMap, BandClassification>> maps;
  for (const auto& f : files) {
    if (!maps.count(f.sample_rate_hz)) {
      maps.emplace(f.sample_rate_hz, std::make_pair(harmonic_map_for(cfg, f.sample_rate_hz, n),
                                                    classification_for(cfg, f.sample_rate_hz, n)));
    }
  }

  // PCA is trained once per CR on the pooled tapered windows of every file.
  std::map<double, std::shared_ptr<const PcaCodec>> pca;
  if (std::find(opt.codecs.begin(), opt.codecs.end(), "pca") != opt.codecs.end()) {
    std::vector<SignalWindow> train;
    for (const auto& f : files) {
      for (auto& w : detail::tapered_windows(f, n)) train.push_back(std::move(w));
    }
    const std::size_t rank = PcaCodec(train, 1).training_rank();
    for (double cr : opt.crs) {
      const std::size_t r = std::min(detail::pca_components(n, cr), std::min(rank, train.size()));
      pca[cr] = std::make_shared<const PcaCodec>(train, std::max<std::size_t>(r, 1));
    }
  }

  struct Task {
    std::string codec;
    double cr;
    std::size_t file;
  };
  std::vector<Task> tasks;
  for (const auto& c : opt.codecs) {
    for (double cr : opt.crs) {
      for (std::size_t i = 0; i < files.size(); ++i) tasks.push_back({c, cr, i});
    }
  }

  auto run_task = [&](const Task& t) {
    using clock = std::chrono::steady_clock;
    const auto& f = files[t.file];
    const auto& [map, cls] = maps.at(f.sample_rate_hz);
    const auto windows = detail::tapered_windows(f, n);
    EncodeConfig ec = cfg.encode;
    ec.compression_ratio = t.cr;
    ec.budget.reset();
    const std::size_t keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(static_cast<double>(n) / t.cr)));

    const auto t0 = clock::now();
    std::vector<EncodedFrame> frames;
    frames.reserve(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const auto& w = windows[i];
      const std::uint64_t s = detail::mix_seed(f.seed, i);
      if (t.codec == "epicmt") {
        frames.push_back(encode(w, cls, ec));
      } else if (t.codec == "dct") {
        frames.push_back(dct_topk_encode(w, keep, ec.fine_bits));
      } else if (t.codec == "cs") {
        frames.push_back(cs_random_encode(w, keep, ec.fine_bits, s));
      } else if (t.codec == "pca") {
        frames.push_back(pca.at(t.cr)->encode(w));
      } else if (t.codec == "no-hpq") {
        // Same bits as the full codec on this window.
        auto flat = ec;
        flat.budget = BitBudget{frame_bits(encode(w, cls, ec))};
        frames.push_back(ablation_no_hpq(w, cls, flat));
      } else {
        frames.push_back(ablation_no_sats(w, cls, ec, SelectionMode::seeded_random, s));
      }
    }
    const auto bytes = pack_stream(frames);
    const auto t1 = clock::now();

    const auto parsed = read_frame_stream(bytes);
    std::vector<double> recon;
    if (t.codec == "pca") {
      std::vector<SignalWindow> ws;
      for (const auto& fr : parsed.frames) {
        ws.push_back(fr ? pca.at(t.cr)->decode(*fr) : SignalWindow{std::vector<double>(n, 0.0), f.sample_rate_hz, 0});
      }
      recon = overlap_add(ws, n / 2);
    } else {
      recon = decode_stream(parsed);
    }
    const auto t2 = clock::now();

    BenchRow row;
    row.codec = t.codec;
    row.cr = t.cr;
    row.file = f.name;
    row.window = n;
    row.frames = frames.size();
    for (const auto& fr : frames) row.bits += frame_bits(fr);
    const auto in = stream_interior(recon.size(), n);
    const std::span<const double> xs(f.samples.data() + in.begin, in.size());
    const std::span<const double> ys(recon.data() + in.begin, in.size());
    row.report = compute_report(xs, ys, f.sample_rate_hz, map);
    if (opt.timing) {
      row.encode_us = std::chrono::duration<double, std::micro>(t1 - t0).count();
      row.decode_us = std::chrono::duration<double, std::micro>(t2 - t1).count();
    }
    return row;
  };

  BenchResult result;
  result.rows.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        result.rows[i] = run_task(tasks[i]);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::clamp<std::size_t>(opt.jobs, 1, std::max<std::size_t>(1, tasks.size()));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  std::sort(result.rows.begin(), result.rows.end(), [](const BenchRow& a, const BenchRow& b) {
    return std::tie(a.codec, a.cr, a.file) < std::tie(b.codec, b.cr, b.file);
  });
  if (std::find(opt.codecs.begin(), opt.codecs.end(), "cs") != opt.codecs.end()) result.notes.push_back(kCsNote);
  return result;
}

inline constexpr const char* kBenchCsvHeader =
    "codec,cr,file,window,bits,snr_db,prd_percent,scr_consistency,scr_sideband,gda_loss,mec_loss,cwt_loss,ac_loss,"
    "encode_us,decode_us";

inline std::string bench_csv(const BenchResult& r) {
  using detail::fmt_num;
  std::string out = std::string(kBenchCsvHeader) + "\n";
  for (const auto& row : r.rows) {
    const auto& m = row.report;
    out += row.codec + "," + fmt_num(row.cr) + "," + row.file + "," + std::to_string(row.window) + "," +
           std::to_string(row.bits) + "," + fmt_num(m.snr_db) + "," + fmt_num(m.prd_percent) + "," +
           fmt_num(m.scr_consistency) + "," + fmt_num(m.scr_sideband) + "," + fmt_num(m.gda_loss) + "," +
           fmt_num(m.mec_loss) + "," + fmt_num(m.cwt_loss) + "," + fmt_num(m.ac_loss) + "," + fmt_num(row.encode_us) +
           "," + fmt_num(row.decode_us) + "\n";
  }
  return out;
}

inline nlohmann::json bench_json(const BenchResult& r, const BenchOptions& opt) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json j = row.report;
    j["codec"] = row.codec;
    j["cr"] = row.cr;
    j["file"] = row.file;
    j["window"] = row.window;
    j["frames"] = row.frames;
    j["bits"] = row.bits;
    j["scr_consistency_rel_error"] = row.report.scr_consistency_rel_error();
    j["encode_us"] = row.encode_us;
    j["decode_us"] = row.decode_us;
    rows.push_back(std::move(j));
  }
  return {{"seed", opt.seed}, {"crs", opt.crs}, {"codecs", opt.codecs}, {"timing", opt.timing},
          {"notes", r.notes}, {"rows", std::move(rows)}};
}

/// Mean over files of one metric, one series per codec, x = CR.
inline std::vector<PlotSeries> bench_series(const BenchResult& r, double (*metric)(const BenchRow&)) {
  std::map<std::string, std::map<double, std::pair<double, std::size_t>>> acc;
  for (const auto& row : r.rows) {
    auto& cell = acc[row.codec][row.cr];
    cell.first += metric(row);
    ++cell.second;
  }
  std::vector<PlotSeries> out;
  for (const auto& [codec, by_cr] : acc) {
    PlotSeries s{codec, {}, {}};
    for (const auto& [cr, cell] : by_cr) {
      s.x.push_back(cr);
      s.y.push_back(cell.first / static_cast<double>(cell.second));
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// Writes report.csv, report.json and the three metric-vs-CR plots.
inline void write_bench_outputs(const BenchResult& r, const BenchOptions& opt, const std::filesystem::path& dir) {
  ensure_directory(dir);
  auto write_text = [](const std::filesystem::path& p, const std::string& s) {
    write_bytes(p, std::vector<std::uint8_t>(s.begin(), s.end()));
  };
  write_text(dir / "report.csv", bench_csv(r));
  write_text(dir / "report.json", bench_json(r, opt).dump(2) + "\n");
  write_text(dir / "snr_vs_cr.svg",
             render_line_chart({"SNR vs compression ratio", "compression ratio", "SNR (dB)"},
                               bench_series(r, [](const BenchRow& x) { return x.report.snr_db; })));
  write_text(dir / "prd_vs_cr.svg",
             render_line_chart({"PRD vs compression ratio", "compression ratio", "PRD (%)"},
                               bench_series(r, [](const BenchRow& x) { return x.report.prd_percent; })));
  write_text(dir / "scr_vs_cr.svg",
             render_line_chart({"SCR consistency error vs compression ratio", "compression ratio", "relative error"},
                               bench_series(r, [](const BenchRow& x) { return x.report.scr_consistency_rel_error(); })));
}

}  // namespace vibcodec::cli
