#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "obdbp/numerics.hpp"
#include "obdbp/rng.hpp"

namespace obdbp::channel {

using numerics::SampledField;

enum class NonlinearMode { kManakov, kScalar };

/// Kerr coefficient multiplier for the polarisation-averaged (Manakov) model.
inline constexpr double kManakovFactor = 8.0 / 9.0;

struct FiberSpan {
  double length_km = 75.5;
  double alpha_db_per_km = 0.283;
  double dispersion_ps_nm_km = 0.01;
  double gamma_per_w_km = 1.6;
  double ref_wavelength_nm = 1310.0;

  void validate() const;
  bool operator==(const FiberSpan&) const = default;
};

struct ProfileRow {
  double wavelength_nm;
  double gain_db;
  double nf_db;
  bool operator==(const ProfileRow&) const = default;
};

/// Amplifier gain and noise figure versus wavelength, sorted by wavelength.
class AmplifierProfile {
 public:
  AmplifierProfile() = default;
  explicit AmplifierProfile(std::vector<ProfileRow> rows);

  const std::vector<ProfileRow>& rows() const noexcept { return rows_; }
  bool operator==(const AmplifierProfile&) const = default;

 private:
  std::vector<ProfileRow> rows_;
};

/// Parses `wavelength_nm,gain_db,nf_db` CSV. Errors name the offending line.
AmplifierProfile parse_amplifier_profile(std::istream& in, const std::string& source_name = "<stream>");
AmplifierProfile load_amplifier_profile(const std::filesystem::path& path);

struct GainNf {
  double gain_db;
  double nf_db;
};

/// Linear interpolation between neighbouring rows; out-of-range wavelengths
/// are rejected.
GainNf profile_lookup(const AmplifierProfile& profile, double wavelength_nm);

/// Inline amplifier description: either a measured profile (noise figure
/// looked up at the signal wavelength) or an explicit noise figure.
struct AmplifierSpec {
  std::optional<AmplifierProfile> profile;
  std::string profile_source;  // where the profile came from, for serialisation
  double nf_db = 5.0;          // used when no profile is set
  bool operator==(const AmplifierSpec&) const = default;

  double noise_figure_db(double wavelength_nm) const;
};

/// Launch power of every span after the first, as a function of LOP1.
/// The table form interpolates linearly in dB and refuses to extrapolate.
struct LopTable {
  std::vector<std::pair<double, double>> rows;  // (lop1_dbm, lop2_dbm), sorted
  bool operator==(const LopTable&) const = default;
};
struct FixedGain {
  double gain_db = 0.0;
  bool operator==(const FixedGain&) const = default;
};
using Lop2Rule = std::variant<LopTable, FixedGain>;

/// Throws std::invalid_argument outside the table range.
double resolve_lop2_dbm(const LopTable& table, double lop1_dbm);

struct LinkConfig {
  std::vector<FiberSpan> spans;
  AmplifierSpec mid_amp;
  double signal_wavelength_nm = 1310.0;
  double lop1_dbm = 0.0;
  Lop2Rule lop2_rule = FixedGain{};
  bool ase_enabled = true;
  // Receive-side amplifier: by default a noiseless power normalisation.
  double rx_power_dbm = 2.0;
  bool rx_amp_ase = false;

  void validate() const;
  bool operator==(const LinkConfig&) const = default;
};

struct SsfmConfig {
  /// Fixed number of steps per span; 0 selects adaptive step control.
  unsigned steps_per_span = 0;
  /// Adaptive bound on the mean nonlinear phase per step.
  double max_phase_per_step_rad = 3e-3;
  NonlinearMode mode = NonlinearMode::kManakov;

  bool operator==(const SsfmConfig&) const = default;
};

struct SsfmReport {
  unsigned steps = 0;
  double max_step_phase_rad = 0.0;  // mean-power nonlinear phase of the first step
  bool phase_bound_exceeded = false;
};

double dispersion_to_beta2(double d_ps_nm_km, double wavelength_nm) noexcept;

/// Frequency-domain multiplication by exp(+i beta2/2 omega^2 L). Apply with
/// -beta2 to invert.
SampledField apply_dispersion(SampledField field, double beta2_ps2_per_km, double length_km);

/// Per-sample phase rotation exp(+i theta). Manakov: theta = 8/9 gamma
/// L_eff (|x|^2 + |y|^2) on both polarisations; scalar: theta_p = gamma
/// L_eff |p|^2. Negative gamma derotates.
SampledField apply_nonlinear(SampledField field, double gamma_per_w_km, double eff_length_km,
                             NonlinearMode mode);

SampledField apply_attenuation(SampledField field, double alpha_db_per_km, double length_km);

double alpha_linear_per_km(double alpha_db_per_km) noexcept;
double effective_length(double alpha_db_per_km, double length_km) noexcept;

/// Step lengths used for a span. A fixed count gives uniform steps; the
/// adaptive mode places boundaries so every step accumulates the same
/// mean-power nonlinear phase, at most max_phase_per_step_rad.
std::vector<double> ssfm_step_lengths(const FiberSpan& span, const SsfmConfig& cfg, double power_w);

/// Symmetric split-step integration of one span: half-step dispersion,
/// nonlinear rotation over the step's effective length (loss-weighted,
/// evaluated at the step's input power), attenuation, half-step
/// dispersion. Second order in the step size.
SampledField ssfm_propagate(SampledField field, const FiberSpan& span, const SsfmConfig& cfg,
                            SsfmReport* report = nullptr);

/// ASE power spectral density per polarisation, (G F - 1) h nu / 2, in W/Hz.
double ase_psd_per_pol(double gain_db, double nf_db, double wavelength_nm) noexcept;

/// Amplitude gain plus white ASE of total power PSD * sample_rate per pol.
SampledField amplify(SampledField field, double gain_db, double nf_db, double wavelength_nm,
                     numerics::RandomStream& rng);
SampledField amplify(SampledField field, double gain_db, double nf_db, double wavelength_nm,
                     std::uint64_t seed);

struct SpanLaunch {
  double length_km;
  double alpha_db_per_km;
  double launch_power_w;
  double launch_power_dbm;
};

/// What propagate_link records for the receiver: the as-launched power of
/// each span plus the geometry needed to back-propagate.
struct LinkProvenance {
  std::vector<SpanLaunch> spans;
  double wavelength_nm = 0.0;
  std::vector<SsfmReport> ssfm;
  std::vector<double> amp_gain_db;
};

struct LinkOutput {
  SampledField field;
  LinkProvenance provenance;
};

/// Launch at LOP1, propagate span by span with an inline amplifier between
/// spans whose gain puts the next span at its resolved launch power. ASE
/// noise streams are derived from `seed` by amplifier index.
LinkOutput propagate_link(const SampledField& field, const LinkConfig& link, const SsfmConfig& cfg,
                          std::uint64_t seed);

/// Receive-side amplifier and power control: rescales to rx_power_dbm and,
/// when enabled, adds that amplifier's ASE.
SampledField receiver_front_end(SampledField field, const LinkConfig& link, std::uint64_t seed);

}  // namespace obdbp::channel
