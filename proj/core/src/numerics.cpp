#include "obdbp/numerics.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace obdbp::numerics {

TimeGrid::TimeGrid(std::size_t n_samples, double sample_rate_hz)
    : n_samples_(n_samples), sample_rate_hz_(sample_rate_hz) {
  if (n_samples < 64 || !std::has_single_bit(n_samples)) {
    throw std::invalid_argument("time grid: n_samples must be a power of two >= 64, got " +
                                std::to_string(n_samples));
  }
  if (!(sample_rate_hz > 0.0) || !std::isfinite(sample_rate_hz)) {
    throw std::invalid_argument("time grid: sample rate must be positive and finite");
  }
}

double TimeGrid::d_omega_rad_per_s() const noexcept {
  return 2.0 * constants::kPi * sample_rate_hz_ / static_cast<double>(n_samples_);
}

double TimeGrid::frequency_hz(std::size_t bin) const noexcept {
  const auto n = static_cast<std::ptrdiff_t>(n_samples_);
  auto k = static_cast<std::ptrdiff_t>(bin);
  if (k >= n / 2) k -= n;
  return static_cast<double>(k) * sample_rate_hz_ / static_cast<double>(n_samples_);
}

double TimeGrid::omega_rad_per_ps(std::size_t bin) const noexcept {
  return 2.0 * constants::kPi * frequency_hz(bin) * 1e-12;
}

std::vector<double> TimeGrid::omegas_rad_per_ps() const {
  std::vector<double> w(n_samples_);
  for (std::size_t k = 0; k < n_samples_; ++k) w[k] = omega_rad_per_ps(k);
  return w;
}

TimeGrid make_time_grid(std::size_t n_samples, double sample_rate_hz) {
  return TimeGrid(n_samples, sample_rate_hz);
}

SampledField::SampledField(TimeGrid g) : grid(g), x(g.size()), y(g.size()) {}

SampledField::SampledField(TimeGrid g, std::vector<Complex> pol_x, std::vector<Complex> pol_y)
    : grid(g), x(std::move(pol_x)), y(std::move(pol_y)) {
  if (x.size() != grid.size() || y.size() != grid.size()) {
    throw std::invalid_argument("sampled field: polarisation lengths must match the grid");
  }
}

double SampledField::energy() const noexcept {
  double e = 0.0;
  for (const auto& v : x) e += std::norm(v);
  for (const auto& v : y) e += std::norm(v);
  return e;
}

double SampledField::average_power_w() const noexcept {
  return x.empty() ? 0.0 : energy() / static_cast<double>(x.size());
}

double dbm_to_watts(double p_dbm) noexcept { return 1e-3 * std::pow(10.0, p_dbm / 10.0); }

double watts_to_dbm(double p_w) {
  if (!(p_w > 0.0)) throw std::invalid_argument("watts_to_dbm: power must be positive");
  return 10.0 * std::log10(p_w / 1e-3);
}

double db_to_linear(double db) noexcept { return std::pow(10.0, db / 10.0); }

double linear_to_db(double lin) {
  if (!(lin > 0.0)) throw std::invalid_argument("linear_to_db: value must be positive");
  return 10.0 * std::log10(lin);
}

SampledField set_average_power(SampledField field, double power_w) {
  if (!(power_w >= 0.0) || !std::isfinite(power_w)) {
    throw std::invalid_argument("set_average_power: target power must be finite and >= 0");
  }
  const double current = field.average_power_w();
  if (power_w == 0.0) {
    for (auto& v : field.x) v = 0.0;
    for (auto& v : field.y) v = 0.0;
    return field;
  }
  if (!(current > 0.0)) {
    throw std::invalid_argument("set_average_power: cannot rescale a zero-power field");
  }
  const double scale = std::sqrt(power_w / current);
  for (auto& v : field.x) v *= scale;
  for (auto& v : field.y) v *= scale;
  return field;
}

double relative_l2_error(const SampledField& a, const SampledField& b) {
  if (a.size() != b.size()) throw std::invalid_argument("relative_l2_error: size mismatch");
  double num = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::norm(a.x[i] - b.x[i]) + std::norm(a.y[i] - b.y[i]);
  }
  const double den = b.energy();
  if (den == 0.0) return num == 0.0 ? 0.0 : INFINITY;
  return std::sqrt(num / den);
}

}  // namespace obdbp::numerics
