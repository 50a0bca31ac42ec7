// vibcodec: synthesize corpora, encode and decode signals, and run the
// compression-ratio benchmark.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bench.hpp"
#include "cli_support.hpp"
#include "vibcodec/vibcodec.hpp"

namespace fs = std::filesystem;
using namespace vibcodec;
using namespace vibcodec::cli;

namespace {

ToolConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return make_tool_config({});
  if (!fs::exists(path)) throw IoError("config file not found: " + path);
  return load_tool_config(path);
}

// --------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> windows_per_class;
  std::string format = "wav";
};

int cmd_synth(const SynthArgs& a) {
  auto cfg = load_config_or_default(a.config);
  auto& cc = cfg.corpus;
  if (a.seed) cc.seed = *a.seed;
  if (a.windows_per_class) {
    if (*a.windows_per_class == 0) throw UsageError("--windows-per-class must be positive");
    cc.windows_per_class = *a.windows_per_class;
  }
  ensure_directory(a.out);
  DatasetManifest manifest;
  const double duration = static_cast<double>(cc.windows_per_class * cc.window_len) / cc.sample_rate_hz;
  for (const auto& c : default_corpus_classes(cc)) {
    auto x = synth_gear(cfg.kinematics, c.profile, duration, cc.sample_rate_hz);
    x.resize(cc.windows_per_class * cc.window_len);
    const fs::path file = fs::path(a.out) / (c.label + "." + a.format);
    save_signal(file, x, cc.sample_rate_hz);
    manifest.entries.push_back({file.filename(), c.label, cc.sample_rate_hz, 0});
    std::cout << file.string() << ": " << cc.windows_per_class << " windows of " << cc.window_len << " samples\n";
  }
  try {
    write_manifest(fs::path(a.out) / "manifest.csv", manifest);
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
  return kOk;
}

// --------------------------------------------------------------------------
// encode

struct EncodeArgs {
  std::string input;
  std::string output;
  std::string config;
  std::string kinematics;
  std::optional<double> cr;
  std::optional<double> delta0;
  std::optional<double> alpha;
  std::optional<int> fine_bits;
  std::optional<int> coarse_bits;
  std::optional<std::uint64_t> budget;
  std::optional<std::size_t> token_len;
  std::optional<std::size_t> window;
  std::optional<std::uint64_t> seed;
  double rate = 0.0;
  std::size_t column = 0;
  bool refine_hint = false;
  bool quiet = false;
};

int cmd_encode(const EncodeArgs& a) {
  auto cfg = load_config_or_default(a.config);
  if (!a.kinematics.empty()) {
    const auto k = load_config_or_default(a.kinematics);
    cfg.kinematics = k.kinematics;
    cfg.band_half_width_set = k.band_half_width_set;
  }
  auto& e = cfg.encode;
  if (a.cr) e.compression_ratio = *a.cr;
  if (a.delta0) e.delta0 = *a.delta0;
  if (a.alpha) e.alpha = *a.alpha;
  if (a.fine_bits) e.fine_bits = *a.fine_bits;
  if (a.coarse_bits) e.coarse_bits = *a.coarse_bits;
  if (a.budget) e.budget = BitBudget{*a.budget};
  if (a.token_len) e.token_len = *a.token_len;
  if (a.seed) e.selection_seed = *a.seed;
  if (a.refine_hint) e.refinement_hint = true;
  const std::size_t n = a.window.value_or(cfg.corpus.window_len);
  if (!is_power_of_two(n)) throw UsageError("--window must be a power of two");
  if (!(e.compression_ratio >= 1.0)) throw UsageError("--cr must be >= 1");
  QuantParams{e.delta0.value_or(1.0), e.alpha, e.fine_bits, e.coarse_bits}.validate();

  const auto sig = load_signal(a.input, a.rate, a.column);
  if (sig.samples.size() < n) throw UsageError("input has fewer samples than one window (" + std::to_string(n) + ")");
  const auto cls = classification_for(cfg, sig.sample_rate_hz, n);
  const auto frames = encode_stream(sig.samples, sig.sample_rate_hz, n, cls, e);
  write_bytes(a.output, pack_stream(frames));

  std::uint64_t payload = 0, side = 0, kept_coefficients = 0;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    payload += frame_bits(f);
    side += side_info_bits(f);
    kept_coefficients += f.kept_count() * f.token_len;
    if (!a.quiet) {
      std::cout << "frame " << i << ": payload_bits " << frame_bits(f) << " side_bits " << side_info_bits(f)
                << " tokens " << f.kept_count() << "\n";
    }
  }
  const double covered = static_cast<double>(stream_length(frames.size(), n));
  char line[256];
  std::snprintf(line, sizeof line, "frames %zu payload_bits %llu side_bits %llu\n", frames.size(),
                static_cast<unsigned long long>(payload), static_cast<unsigned long long>(side));
  std::cout << line;
  std::snprintf(line, sizeof line, "achieved CR %.4f (vs 32-bit samples, payload only), %.4f with side info, "
                "coefficient ratio %.4f\n",
                covered * 32.0 / static_cast<double>(payload), covered * 32.0 / static_cast<double>(payload + side),
                static_cast<double>(frames.size() * n) / static_cast<double>(kept_coefficients));
  std::cout << line;
  return kOk;
}

// --------------------------------------------------------------------------
// decode

struct DecodeArgs {
  std::string input;
  std::string output;
  std::size_t refine = 0;
  double eta = 0.5;
  double mix = 1.0;
};

int cmd_decode(const DecodeArgs& a) {
  const auto bytes = read_bytes(a.input);
  const auto stream = read_frame_stream(bytes);
  for (const auto& w : stream.warnings) std::cerr << "warning: skipped corrupted " << w << "\n";
  double rate = 0.0;
  for (const auto& f : stream.frames) {
    if (!f) continue;
    if (f->family() == CodecFamily::pca) throw UsageError("PCA frames need the fitted basis and cannot be decoded here");
    rate = f->sample_rate_hz;
  }
  if (rate == 0.0) throw IoError("no decodable frames in " + a.input);
  auto x = decode_stream(stream);
  if (a.refine > 0) {
    const auto rc = RefineConfig::constant(a.refine, a.eta, a.mix);
    try {
      rc.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    x = refine_stream(x, stream, rc);
  }
  save_signal(a.output, x, rate);
  std::cout << "frames " << stream.frames.size() << " corrupted " << stream.corrupted << " samples " << x.size() << "\n";
  return kOk;
}

// --------------------------------------------------------------------------
// bench

struct BenchArgs {
  std::string manifest;
  std::string out;
  std::string config;
  std::vector<double> crs;
  std::vector<std::string> codecs;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> window;
  bool no_timing = false;
  std::size_t jobs = 1;
};

int cmd_bench(const BenchArgs& a) {
  auto cfg = load_config_or_default(a.config);
  if (a.window) {
    if (!is_power_of_two(*a.window)) throw UsageError("--window must be a power of two");
    cfg.corpus.window_len = *a.window;
  }
  BenchOptions opt;
  opt.crs = a.crs.empty() ? cfg.bench_crs : a.crs;
  opt.codecs = a.codecs.empty() ? cfg.bench_codecs : a.codecs;
  opt.seed = a.seed.value_or(cfg.seed);
  opt.timing = !a.no_timing;
  opt.jobs = a.jobs;
  DatasetManifest manifest;
  try {
    manifest = read_manifest(a.manifest);
  } catch (const std::exception& e) {
    throw IoError(e.what());
  }
  const auto result = run_bench(manifest, a.manifest, cfg, opt);
  write_bench_outputs(result, opt, a.out);
  for (const auto& note : result.notes) std::cout << "note: " << note << "\n";
  std::cout << result.rows.size() << " rows written to " << a.out << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harmonic-aware vibration codec (epicmt): synth, encode, decode, bench"};
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Write the default synthetic gear corpus and a manifest");
  synth->add_option("--config", sa.config, "Config file");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--seed", sa.seed, "Corpus seed");
  synth->add_option("--windows-per-class", sa.windows_per_class, "Windows per class");
  synth->add_option("--format", sa.format, "wav or csv")->check(CLI::IsMember({"wav", "csv"}));

  EncodeArgs ea;
  auto* enc = app.add_subcommand("encode", "Encode a signal into a frame stream");
  enc->add_option("input", ea.input, "Input signal (.wav or .csv)")->required();
  enc->add_option("output", ea.output, "Output frame stream")->required();
  enc->add_option("--config", ea.config, "Config file");
  enc->add_option("--kinematics", ea.kinematics, "Config file whose [kinematics] section is used");
  enc->add_option("--cr", ea.cr, "Compression ratio");
  enc->add_option("--delta0", ea.delta0, "Base quantizer step (default: fitted per frame)");
  enc->add_option("--alpha", ea.alpha, "Protection strength");
  enc->add_option("--fine-bits", ea.fine_bits, "Code width in protected bins");
  enc->add_option("--coarse-bits", ea.coarse_bits, "Code width elsewhere");
  enc->add_option("--budget", ea.budget, "Per-frame payload budget in bits");
  enc->add_option("--token-len", ea.token_len, "Coefficients per token");
  enc->add_option("--window", ea.window, "Window length (power of two)");
  enc->add_option("--rate", ea.rate, "Sample rate for CSV input");
  enc->add_option("--column", ea.column, "CSV column index");
  enc->add_option("--seed", ea.seed, "Seed for random selection modes");
  enc->add_flag("--refine-hint", ea.refine_hint, "Set the refinement hint flag");
  enc->add_flag("--quiet", ea.quiet, "Print only the summary");

  DecodeArgs da;
  auto* dec = app.add_subcommand("decode", "Decode a frame stream into a signal");
  dec->add_option("input", da.input, "Input frame stream")->required();
  dec->add_option("output", da.output, "Output signal (.wav or .csv)")->required();
  dec->add_option("--refine", da.refine, "Physics-projection refinement steps");
  dec->add_option("--eta", da.eta, "Refinement step size");
  dec->add_option("--mix", da.mix, "Refinement mixing weight");

  BenchArgs ba;
  auto* bench = app.add_subcommand("bench", "Sweep codecs and compression ratios over a manifest");
  bench->add_option("manifest", ba.manifest, "Dataset manifest")->required();
  bench->add_option("--out", ba.out, "Output directory")->required();
  bench->add_option("--config", ba.config, "Config file");
  bench->add_option("--crs", ba.crs, "Compression ratios")->delimiter(',');
  bench->add_option("--codecs", ba.codecs, "epicmt,dct,pca,cs,no-hpq,no-sats")->delimiter(',');
  bench->add_option("--seed", ba.seed, "Seed for random selection and CS");
  bench->add_option("--window", ba.window, "Window length (power of two)");
  bench->add_flag("--no-timing", ba.no_timing, "Write zero timings so reruns are byte-identical");
  bench->add_option("--jobs", ba.jobs, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth) return cmd_synth(sa);
    if (*enc) return cmd_encode(ea);
    if (*dec) return cmd_decode(da);
    return cmd_bench(ba);
  } catch (const BudgetInfeasible& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInfeasible;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ConfigError& e) {
    std::cerr << "error: config: " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
}
