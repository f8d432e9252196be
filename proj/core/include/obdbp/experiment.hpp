#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "obdbp/config.hpp"
#include "obdbp/metrics.hpp"

namespace obdbp::harness {

inline constexpr const char* kToolVersion = "0.3.0";

/// One transmitted and received trace, before any receiver DSP.
struct TraceSimulation {
  txrx::Bits bits;
  txrx::SymbolFrame tx;
  numerics::SampledField received;
  dsp::LinkKnowledge knowledge;
  double lop2_dbm = 0.0;
};

/// bits -> map -> shape -> tx noise share -> link -> receiver front end ->
/// rx noise share. Every random draw comes from a stream keyed by
/// (cfg.seed, purpose, trace_index), so the same trace index sees the same
/// bits and noise realisations at every launch power.
TraceSimulation simulate_trace(const ExperimentConfig& cfg, std::size_t trace_index);

struct Evaluation {
  double snr_db = 0.0;
  double gmi_bits = 0.0;
  double air_bps = 0.0;
};

/// EDC (at the fibre dispersion) or DBP with `dbp`, then matched filter,
/// scalar equaliser and metrics.
Evaluation evaluate(const TraceSimulation& sim, const ExperimentConfig& cfg, Compensation compensation,
                    const dsp::DbpConfig& dbp);

metrics::MetricsRecord run_single(const ExperimentConfig& cfg, std::size_t trace_index);

struct RunMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string tool_version;
};

/// Records in sweep order. `summary` holds derived facts such as optimal
/// launch powers, written as comment lines by the emitters.
struct SweepResult {
  std::string axis;  // "lop1_dbm", "kappa", "dbp_grid" or "single"
  std::vector<metrics::MetricsRecord> records;
  RunMeta meta;
  std::vector<std::string> summary;
};

/// cfg.traces traces at cfg's launch power and compensation, aggregated.
SweepResult run_experiment(const ExperimentConfig& cfg);

/// EDC and DBP records per LOP1 (traces shared between the two variants).
SweepResult sweep_lop(const ExperimentConfig& cfg, const std::vector<double>& powers_dbm);

/// LOP1 with the highest SNR among records labelled `compensation`.
double optimal_lop(const SweepResult& lop_sweep, const std::string& compensation);

/// DBP records per kappa plus the shared EDC reference at one LOP1. When
/// lop1_dbm is empty the DBP-optimal LOP of cfg.lop_sweep_dbm is used.
SweepResult sweep_kappa(const ExperimentConfig& cfg, const std::vector<double>& kappas,
                        std::optional<double> lop1_dbm = std::nullopt);

/// Full (d, gamma) surface at cfg's LOP1, plus one EDC record per d. Surface
/// records carry SNR only (GMI and AIR are NaN).
SweepResult sweep_dbp_grid(const ExperimentConfig& cfg, const std::vector<double>& d_values,
                           const std::vector<double>& gamma_values);

/// Throws std::invalid_argument for an empty result, std::runtime_error when
/// the file cannot be written.
void emit_csv(const SweepResult& result, const std::filesystem::path& path);
void emit_plot_data(const SweepResult& result, const std::filesystem::path& path);
std::string format_csv(const SweepResult& result);
std::string format_plot_data(const SweepResult& result);

}  // namespace obdbp::harness
