#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace obdbp {

using Complex = std::complex<double>;

namespace constants {
inline constexpr double kSpeedOfLight = 299792458.0;       // m/s
inline constexpr double kPlanck = 6.62607015e-34;          // J·s
inline constexpr double kSpeedOfLightNmPerPs = 2.99792458e5;
inline constexpr double kPi = 3.14159265358979323846;
}  // namespace constants

namespace numerics {

/// Uniform sampling grid shared by every waveform in a simulation.
///
/// Time is carried in picoseconds and angular frequency in rad/ps so that
/// dispersion phases beta2 [ps^2/km] * omega^2 * length [km] come out in
/// radians without conversion factors.
///
/// Frequency bins follow the usual DFT ordering: bin 0 is DC, bins
/// 1..N/2-1 are positive frequencies, bins N/2..N-1 are negative
/// frequencies. omega_rad_per_ps(k) is the only place that mapping lives.
class TimeGrid {
 public:
  /// Throws std::invalid_argument unless n_samples is a power of two >= 64
  /// and sample_rate_hz > 0.
  TimeGrid(std::size_t n_samples, double sample_rate_hz);

  std::size_t size() const noexcept { return n_samples_; }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }
  double dt_s() const noexcept { return 1.0 / sample_rate_hz_; }
  double dt_ps() const noexcept { return 1e12 / sample_rate_hz_; }
  double duration_s() const noexcept { return static_cast<double>(n_samples_) / sample_rate_hz_; }

  /// Bin spacing in rad/s.
  double d_omega_rad_per_s() const noexcept;

  double frequency_hz(std::size_t bin) const noexcept;
  double omega_rad_per_ps(std::size_t bin) const noexcept;
  std::vector<double> omegas_rad_per_ps() const;

  bool operator==(const TimeGrid&) const = default;

 private:
  std::size_t n_samples_;
  double sample_rate_hz_;
};

TimeGrid make_time_grid(std::size_t n_samples, double sample_rate_hz);

/// Dual-polarisation complex envelope. Amplitudes are in sqrt(W), so
/// |x|^2 + |y|^2 is instantaneous power in watts.
struct SampledField {
  TimeGrid grid;
  std::vector<Complex> x;
  std::vector<Complex> y;

  explicit SampledField(TimeGrid g);
  SampledField(TimeGrid g, std::vector<Complex> pol_x, std::vector<Complex> pol_y);

  std::size_t size() const noexcept { return x.size(); }
  double average_power_w() const noexcept;
  double energy() const noexcept;  // sum of |x|^2 + |y|^2 over samples
};

double dbm_to_watts(double p_dbm) noexcept;
/// Throws std::invalid_argument for p_w <= 0.
double watts_to_dbm(double p_w);
double db_to_linear(double db) noexcept;
double linear_to_db(double lin);

/// Global real rescale to the requested mean power. A zero-power field is
/// rejected unless the target is also zero.
SampledField set_average_power(SampledField field, double power_w);

/// Relative L2 distance ||a - b|| / ||b|| over both polarisations.
double relative_l2_error(const SampledField& a, const SampledField& b);

}  // namespace numerics
}  // namespace obdbp
