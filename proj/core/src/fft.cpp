#include "obdbp/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

namespace obdbp::numerics {
namespace {

// FFTW planning is not thread-safe; executing an existing plan on new
// arrays is. Plans are created once per (size, direction) under a lock and
// kept for the process lifetime.
class PlanCache {
 public:
  fftw_plan get(std::size_t n, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, sign);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plans_.emplace(key, plan);
    return plan;
  }

  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

thread_local TransformCounts tl_counts;

void execute(std::span<Complex> data, int sign) {
  if (data.empty()) return;
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_execute_dft(plan_cache().get(data.size(), sign), ptr, ptr);
}

}  // namespace

void fft_forward(std::span<Complex> data) { execute(data, FFTW_FORWARD); }

void fft_inverse(std::span<Complex> data) {
  execute(data, FFTW_BACKWARD);
  const double scale = 1.0 / static_cast<double>(data.size());
  for (auto& v : data) v *= scale;
}

void to_frequency_domain(SampledField& field) {
  fft_forward(field.x);
  fft_forward(field.y);
  ++tl_counts.forward;
}

void to_time_domain(SampledField& field) {
  fft_inverse(field.x);
  fft_inverse(field.y);
  ++tl_counts.inverse;
}

TransformCounts transform_counts() noexcept { return tl_counts; }
void reset_transform_counts() noexcept { tl_counts = {}; }

}  // namespace obdbp::numerics
