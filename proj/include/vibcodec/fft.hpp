#pragma once

// Thin RAII layer over FFTW3. Plans are created once per (kind, length) and
// executed through the new-array interface, so callers on different threads
// can share them.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace vibcodec::detail {

enum class PlanKind { forward, backward, redft10, redft01 };

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

  fftw_plan get(PlanKind kind, std::size_t n) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto key = std::make_pair(kind, n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const int len = static_cast<int>(n);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nullptr;
    if (kind == PlanKind::forward || kind == PlanKind::backward) {
      auto* buf = fftw_alloc_complex(n);
      plan = fftw_plan_dft_1d(len, buf, buf,
                              kind == PlanKind::forward ? FFTW_FORWARD : FFTW_BACKWARD, flags);
      fftw_free(buf);
    } else {
      auto* in = fftw_alloc_real(n);
      auto* out = fftw_alloc_real(n);
      plan = fftw_plan_r2r_1d(len, in, out, kind == PlanKind::redft10 ? FFTW_REDFT10 : FFTW_REDFT01,
                              flags);
      fftw_free(in);
      fftw_free(out);
    }
    if (plan == nullptr) throw std::runtime_error("fftw: plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<PlanKind, std::size_t>, fftw_plan> plans_;
};

/// Unnormalized in-place complex transform (inverse scales by n).
inline void fft_inplace(std::vector<std::complex<double>>& buf, bool inverse) {
  if (buf.empty()) return;
  fftw_plan plan =
      PlanCache::instance().get(inverse ? PlanKind::backward : PlanKind::forward, buf.size());
  auto* data = reinterpret_cast<fftw_complex*>(buf.data());
  fftw_execute_dft(plan, data, data);
}

inline std::vector<std::complex<double>> fft_real(std::span<const double> x, std::size_t n) {
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < x.size() && i < n; ++i) buf[i] = x[i];
  fft_inplace(buf, false);
  return buf;
}

/// FFTW REDFT10 / REDFT01 (unnormalized DCT-II / DCT-III).
inline std::vector<double> r2r(PlanKind kind, std::span<const double> x) {
  std::vector<double> in(x.begin(), x.end());
  std::vector<double> out(x.size());
  if (x.empty()) return out;
  fftw_plan plan = PlanCache::instance().get(kind, x.size());
  fftw_execute_r2r(plan, in.data(), out.data());
  return out;
}

}  // namespace vibcodec::detail
