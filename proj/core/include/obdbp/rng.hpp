#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "obdbp/numerics.hpp"

namespace obdbp::numerics {

/// Stream derivation rule: stream(seed, label, index) hashes the three
/// inputs through SplitMix64 into a 64-bit engine seed. Streams with
/// different labels or indices are statistically independent, which lets
/// sweep points and traces draw noise in any order (or in parallel) and
/// still reproduce bit-for-bit.
std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::string_view label,
                                 std::uint64_t index) noexcept;

/// mt19937_64 with hand-rolled uniform/normal transforms. std::*_distribution
/// output is implementation-defined, these are not.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}
  RandomStream(std::uint64_t master_seed, std::string_view label, std::uint64_t index)
      : engine_(derive_stream_seed(master_seed, label, index)) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on (0, 1].
  double uniform_open0();
  int bit() { return static_cast<int>(engine_() >> 63); }
  /// Circularly-symmetric complex Gaussian with E|z|^2 = 1.
  Complex complex_normal();

 private:
  std::mt19937_64 engine_;
};

/// Complex white Gaussian noise with E|n|^2 = variance_per_pol on each
/// polarisation.
SampledField gaussian_noise(const TimeGrid& grid, double variance_per_pol, RandomStream& rng);
SampledField gaussian_noise(const TimeGrid& grid, double variance_per_pol, std::uint64_t seed);

/// Adds noise of the given per-sample variance to both polarisations in place.
void add_gaussian_noise(SampledField& field, double variance_per_pol, RandomStream& rng);

}  // namespace obdbp::numerics
