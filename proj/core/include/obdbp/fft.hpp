#pragma once

#include <cstdint>
#include <span>

#include "obdbp/numerics.hpp"

namespace obdbp::numerics {

// In-place DFTs backed by FFTW. The forward transform is unscaled and the
// inverse carries the 1/N factor, so forward followed by inverse is the
// identity and a multiplier of unit modulus in between is exactly unitary.
void fft_forward(std::span<Complex> data);
void fft_inverse(std::span<Complex> data);

// Field-level transforms act on both polarisations. Each call bumps a
// thread-local counter; one forward plus one inverse call is a "transform
// pair" in the accounting used by the DSP complexity checks.
void to_frequency_domain(SampledField& field);
void to_time_domain(SampledField& field);

struct TransformCounts {
  std::uint64_t forward = 0;
  std::uint64_t inverse = 0;

  std::uint64_t pairs() const noexcept { return forward < inverse ? forward : inverse; }
  bool operator==(const TransformCounts&) const = default;
};

TransformCounts transform_counts() noexcept;
void reset_transform_counts() noexcept;

/// RAII helper: counts transforms issued by this thread during its lifetime.
class ScopedTransformCounter {
 public:
  ScopedTransformCounter() noexcept : start_(transform_counts()) {}
  TransformCounts delta() const noexcept {
    const auto now = transform_counts();
    return {now.forward - start_.forward, now.inverse - start_.inverse};
  }

 private:
  TransformCounts start_;
};

}  // namespace obdbp::numerics
