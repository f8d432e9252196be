#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "obdbp/channel.hpp"
#include "obdbp/dsp.hpp"
#include "obdbp/txrx.hpp"

namespace obdbp::harness {

/// Configuration problems: missing files, schema violations, unknown
/// presets. The message carries "file:line: " when a location is known.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Compensation { kEdc, kDbp };

struct DbpGrid {
  std::vector<double> d_values_ps_nm_km;
  std::vector<double> gamma_values_per_w_km;
  bool operator==(const DbpGrid&) const = default;
};

/// Fully resolved experiment description. Every optional key of the file
/// format has been replaced by its default, so serialising and re-parsing
/// gives back an equal value.
///
/// Keys (units in the names) and defaults:
///   preset                 experiment preset used as the base     (none)
///   link_preset | link     link description                       (required)
///   symbol_rate_bd         50e9
///   qam_order              256
///   n_symbols              32768 (power of two)
///   samples_per_symbol     2
///   rolloff                0.01
///   rrc_span_symbols       128
///   lop1_dbm               0
///   gamma_per_w_km         taken from the link spans; overrides all spans when set
///   b2b_snr_db             inf (disabled)
///   tx_noise_fraction      0.5
///   ssfm_steps_per_span    0 (adaptive)
///   ssfm_max_phase_rad     0.003
///   nonlinear_mode         manakov | scalar                       (manakov)
///   compensation           edc | dbp                              (dbp)
///   dbp.kappa              0.5
///   dbp.d_dbp_ps_nm_km     first span dispersion
///   dbp.gamma_dbp_per_w_km first span gamma
///   dbp.mode               single_step_wh | multi_step            (single_step_wh)
///   dbp.steps_per_span     1
///   seed                   1
///   traces                 50
///   threads                0 (hardware concurrency)
///   lop_sweep_dbm          [-9, -6, -3, 0, 3, 6, 9]
///   kappa_sweep            [0, 0.2, 0.4, 0.6, 0.8, 1]
///   kappa_sweep_lop1_dbm   unset: use the DBP-optimal LOP of lop_sweep_dbm
///   dbp_grid.d_values_ps_nm_km      [dbp.d_dbp_ps_nm_km]
///   dbp_grid.gamma_values_per_w_km  [0, dbp.gamma_dbp_per_w_km]
struct ExperimentConfig {
  std::string preset_name;
  std::string link_name;
  channel::LinkConfig link;
  txrx::TxConfig tx;
  unsigned qam_order = 256;
  double b2b_snr_db = INFINITY;
  double tx_noise_fraction = 0.5;
  channel::SsfmConfig ssfm;
  Compensation compensation = Compensation::kDbp;
  dsp::DbpConfig dbp;
  std::uint64_t seed = 1;
  unsigned traces = 50;
  unsigned threads = 0;
  std::vector<double> lop_sweep_dbm{-9, -6, -3, 0, 3, 6, 9};
  std::vector<double> kappa_sweep{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  std::optional<double> kappa_sweep_lop1_dbm;
  DbpGrid dbp_grid;

  double wavelength_nm() const noexcept { return link.signal_wavelength_nm; }
  /// Dispersion EDC undoes: that of the first span.
  double fibre_dispersion_ps_nm_km() const { return link.spans.at(0).dispersion_ps_nm_km; }
  void validate() const;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Root of the shipped data (amplifier profile, presets). Resolution order:
/// $OBDBP_DATA_DIR, then the directory baked in at build time.
std::filesystem::path data_dir();

ExperimentConfig parse_config(const std::filesystem::path& path);
/// base_dir resolves relative paths inside the text.
ExperimentConfig parse_config_text(const std::string& text, const std::string& source_name,
                                   const std::filesystem::path& base_dir);
ExperimentConfig load_preset(const std::string& name);
channel::LinkConfig load_link_preset(const std::string& name);

std::string serialize_config(const ExperimentConfig& cfg);
/// FNV-1a over the serialised form (threads excluded), as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);

}  // namespace obdbp::harness
