#pragma once

#include <cstddef>
#include <vector>

#include "obdbp/channel.hpp"
#include "obdbp/numerics.hpp"
#include "obdbp/txrx.hpp"

namespace obdbp::dsp {

using numerics::SampledField;

enum class DbpMode { kSingleStepWh, kMultiStep };

struct DbpConfig {
  double kappa = 0.5;                 // fraction of dispersion undone before the nonlinear stage
  double d_dbp_ps_nm_km = 0.01;
  double gamma_dbp_per_w_km = 1.6;
  DbpMode mode = DbpMode::kSingleStepWh;
  unsigned steps_per_span = 1;        // multi-step only
  channel::NonlinearMode nonlinear = channel::NonlinearMode::kManakov;

  void validate() const;
  bool operator==(const DbpConfig&) const = default;
};

struct SpanKnowledge {
  double length_km;
  double alpha_db_per_km;
  double launch_power_w;
};

/// What the receiver knows about the link it is undoing.
struct LinkKnowledge {
  std::vector<SpanKnowledge> spans;
  double wavelength_nm = 1310.0;

  double total_length_km() const noexcept;
  /// sum over spans of P_span * L_eff,span, in W km.
  double nonlinear_weight_w_km() const noexcept;

  static LinkKnowledge from_provenance(const channel::LinkProvenance& provenance);
};

/// Undoes d * total_length of dispersion in one frequency-domain product.
SampledField edc(SampledField field, const LinkKnowledge& link, double d_ps_nm_km);

/// Wiener-Hammerstein single-step back-propagation over the whole link:
/// kappa of the accumulated dispersion is removed, then a power-dependent
/// phase derotation theta = eta gamma_dbp |u~|^2 sum_s(P_s L_eff,s) with u~
/// normalised to unit mean power, then the remaining (1 - kappa). Uses one
/// transform pair when kappa is 0 or 1, two otherwise.
SampledField dbp_single_step_wh(SampledField field, const LinkKnowledge& link, const DbpConfig& cfg);

/// Span-by-span back-propagation in reverse order with symmetric steps.
/// Each span is entered at its known output power, loss is undone step by
/// step and the nonlinear derotation uses the local power. The result is
/// rescaled to the input's mean power so that gamma_dbp = 0 reduces to EDC.
SampledField dbp_multi_step(SampledField field, const LinkKnowledge& link, const DbpConfig& cfg);

/// Dispatches on cfg.mode.
SampledField digital_backpropagation(SampledField field, const LinkKnowledge& link, const DbpConfig& cfg);

/// A received waveform with its ground truth, for parameter sweeps.
struct DbpTrace {
  SampledField received;
  txrx::SymbolFrame transmitted;
};

struct DbpSweepPoint {
  double d_dbp_ps_nm_km;
  double gamma_dbp_per_w_km;
  double snr_db;
  double gain_db;  // over EDC with the same dispersion value
};

struct DbpSweepResult {
  double best_d_ps_nm_km = 0.0;
  double best_gamma_per_w_km = 0.0;
  double best_snr_db = 0.0;
  double edc_snr_db = 0.0;  // EDC at the best d
  std::vector<DbpSweepPoint> map;  // d-major, gamma-minor, in grid order
};

struct DbpSweepOptions {
  /// Grid points whose SNR is within this margin of the maximum count as
  /// ties; among ties the smallest |gamma|, then the smallest |d|, wins.
  double tie_tolerance_db = 0.01;
  unsigned threads = 1;
};

/// Post-DBP SNR over a common set of traces for every (d, gamma) grid
/// point. Traces are processed identically at every point (common random
/// numbers); per-trace SNRs are averaged in linear power.
DbpSweepResult dbp_param_sweep(const std::vector<DbpTrace>& traces, const LinkKnowledge& link,
                               const txrx::TxConfig& tx, const DbpConfig& base,
                               const std::vector<double>& d_grid, const std::vector<double>& gamma_grid,
                               const DbpSweepOptions& options = {});

}  // namespace obdbp::dsp
