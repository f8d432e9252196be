#include "obdbp/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace obdbp::numerics {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_stream_seed(std::uint64_t master_seed, std::string_view label,
                                 std::uint64_t index) noexcept {
  std::uint64_t h = splitmix64(master_seed);
  h = splitmix64(h ^ fnv1a(label));
  h = splitmix64(h ^ index);
  return h;
}

double RandomStream::uniform_open0() {
  // 53 random mantissa bits, shifted so that 0 is excluded and 1 included.
  return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

Complex RandomStream::complex_normal() {
  // |z|^2 = -ln(u1) is Exp(1) and the phase is uniform, so E|z|^2 = 1.
  const double radius = std::sqrt(-std::log(uniform_open0()));
  const double phase = 2.0 * constants::kPi * uniform_open0();
  return std::polar(radius, phase);
}

void add_gaussian_noise(SampledField& field, double variance_per_pol, RandomStream& rng) {
  if (!(variance_per_pol >= 0.0) || !std::isfinite(variance_per_pol)) {
    throw std::invalid_argument("gaussian noise: variance must be finite and >= 0");
  }
  if (variance_per_pol == 0.0) return;
  const double sigma = std::sqrt(variance_per_pol);
  for (auto& v : field.x) v += sigma * rng.complex_normal();
  for (auto& v : field.y) v += sigma * rng.complex_normal();
}

SampledField gaussian_noise(const TimeGrid& grid, double variance_per_pol, RandomStream& rng) {
  SampledField out(grid);
  add_gaussian_noise(out, variance_per_pol, rng);
  return out;
}

SampledField gaussian_noise(const TimeGrid& grid, double variance_per_pol, std::uint64_t seed) {
  RandomStream rng(seed);
  return gaussian_noise(grid, variance_per_pol, rng);
}

}  // namespace obdbp::numerics
