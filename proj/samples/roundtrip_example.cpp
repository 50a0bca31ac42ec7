// Encodes one second of a synthetic faulty gearbox at several compression
// ratios and prints reconstruction quality for each.

#include <cstdio>
#include <span>

#include "vibcodec/vibcodec.hpp"

int main() {
  using namespace vibcodec;
  constexpr double kFs = 20000.0;
  constexpr std::size_t kN = 1024;

  const auto kin = default_kinematics(kFs, kN);
  const auto map = derive_harmonics(kin);
  const auto cls = classify_bins(map, kN, kFs);
  const auto fault = default_corpus_classes(CorpusConfig{}).back();
  const auto x = synth_gear(kin, fault.profile, 1.0, kFs);

  std::printf("%6s %10s %9s %9s %12s\n", "cr", "bytes", "snr_db", "prd_%", "scr_rel_err");
  for (double cr : {4.0, 8.0, 16.0, 32.0, 64.0}) {
    EncodeConfig cfg;
    cfg.compression_ratio = cr;
    const auto bytes = pack_stream(encode_stream(x, kFs, kN, cls, cfg));
    const auto y = decode_stream(read_frame_stream(bytes));
    const auto in = stream_interior(y.size(), kN);
    const auto r = compute_report(std::span(x).subspan(in.begin, in.size()), std::span(y).subspan(in.begin, in.size()),
                                  kFs, map);
    std::printf("%6.0f %10zu %9.2f %9.2f %12.4f\n", cr, bytes.size(), r.snr_db, r.prd_percent,
                r.scr_consistency_rel_error());
  }
  return 0;
}
