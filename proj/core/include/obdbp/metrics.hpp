#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "obdbp/txrx.hpp"

namespace obdbp::metrics {

/// Finite cap reported when the residual is exactly zero.
inline constexpr double kSnrCapDb = 200.0;

struct SnrEstimate {
  double db = 0.0;
  bool capped = false;  // residual was zero; db holds kSnrCapDb
};

/// 10 log10(sum |X|^2 / sum |X - Y|^2) with both polarisations pooled.
/// Expects Y to be scalar-equalised. Rejects empty or mismatched frames.
SnrEstimate snr_estimate(const txrx::SymbolFrame& tx, const txrx::SymbolFrame& rx);

/// 10 log10(sum |Y - X|^2 / sum |X|^2), pooled over polarisations.
double evm_db(const txrx::SymbolFrame& tx, const txrx::SymbolFrame& rx);

struct GmiEstimate {
  double bits = 0.0;       // summed over polarisations
  bool noiseless = false;  // a zero residual short-circuited to log2(M) per pol
};

/// Bit-wise GMI of one polarisation under a circular Gaussian auxiliary
/// channel with variance fitted from the residual. Exact log-sum-exp bit
/// metrics; for square Gray QAM the sums factor per axis, which is what
/// this uses.
GmiEstimate gmi_polarisation(std::span<const std::uint16_t> tx_labels, std::span<const Complex> rx,
                             const txrx::Constellation& constellation);

/// Polarisation-summed GMI for bits laid out as map_bits lays them out.
GmiEstimate gmi_estimate(const txrx::Bits& tx_bits, const txrx::SymbolFrame& rx,
                         const txrx::Constellation& constellation);

/// Symbol rate times polarisation-summed GMI, in b/s.
double air(double gmi_bits_per_pdm_symbol, double symbol_rate_bd);

/// Sweep coordinates attached to a metrics record. Two records aggregate
/// only when these match exactly.
struct Coordinates {
  double lop1_dbm = 0.0;
  double lop2_dbm = 0.0;
  double kappa = 0.0;
  double wavelength_nm = 0.0;
  double symbol_rate_bd = 0.0;
  std::string compensation;  // "edc", "dbp", or a dbp grid label
  double d_dbp_ps_nm_km = 0.0;
  double gamma_dbp_per_w_km = 0.0;

  bool operator==(const Coordinates&) const = default;
};

struct MetricsRecord {
  double snr_db = 0.0;
  double gmi_bits = 0.0;
  double air_bps = 0.0;
  Coordinates coords;
  std::size_t n_traces = 1;

  bool operator==(const MetricsRecord&) const = default;
};

/// SNR averaged in linear power, GMI and AIR arithmetically, trace counts
/// summed. Rejects an empty list or mixed coordinates.
MetricsRecord aggregate(std::span<const MetricsRecord> records);

}  // namespace obdbp::metrics
