#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "obdbp/numerics.hpp"
#include "obdbp/rng.hpp"

namespace obdbp::txrx {

using numerics::SampledField;

using Bits = std::vector<std::uint8_t>;

/// Gray-labelled square QAM with unit mean energy.
///
/// Labelling: each axis carries log2(M)/2 bits encoded with the reflected
/// Gray code, in-phase bits first (most significant). Gray index 0 sits at
/// the most positive amplitude, so the all-zero label of QPSK is (1+i)/sqrt(2).
class Constellation {
 public:
  /// M must be one of 4, 16, 64, 256.
  explicit Constellation(unsigned order);

  unsigned order() const noexcept { return order_; }
  unsigned bits_per_symbol() const noexcept { return bits_per_symbol_; }
  unsigned bits_per_axis() const noexcept { return bits_per_symbol_ / 2; }
  unsigned levels_per_axis() const noexcept { return levels_; }

  /// Points indexed by label value.
  const std::vector<Complex>& points() const noexcept { return points_; }
  Complex point(unsigned label) const { return points_.at(label); }

  /// Per-axis amplitudes (normalised), indexed by axis Gray label.
  const std::vector<double>& axis_levels() const noexcept { return axis_levels_; }

  /// Bit p (0 = most significant) of a label.
  unsigned label_bit(unsigned label, unsigned p) const noexcept {
    return (label >> (bits_per_symbol_ - 1 - p)) & 1u;
  }

  /// Minimum-distance decision, returns the label.
  unsigned decide(Complex y) const noexcept;

 private:
  unsigned order_;
  unsigned bits_per_symbol_;
  unsigned levels_;
  std::vector<double> axis_levels_;
  std::vector<Complex> points_;
};

Constellation build_constellation(unsigned order);

struct TxConfig {
  double symbol_rate_bd = 50e9;
  double rolloff = 0.01;
  unsigned samples_per_symbol = 2;
  std::size_t n_symbols = 1u << 15;
  // Reference length for the truncated time-domain RRC. Filtering itself is
  // done circularly over the whole block, so this only bounds the taps
  // reported by rrc_taps().
  unsigned rrc_span_symbols = 128;

  double sample_rate_hz() const noexcept { return symbol_rate_bd * samples_per_symbol; }
  /// Throws std::invalid_argument when a field is out of range or the
  /// occupied bandwidth (1 + rolloff) * symbol_rate exceeds the sample rate.
  void validate() const;

  bool operator==(const TxConfig&) const = default;
};

struct BitSource {
  std::uint64_t seed = 0;
  std::size_t length = 0;
  bool operator==(const BitSource&) const = default;
};

/// Symbol sequences for both polarisations. Transmitted frames also carry
/// the point labels and the bit source they were drawn from; received
/// frames leave those empty.
struct SymbolFrame {
  std::vector<Complex> x;
  std::vector<Complex> y;
  std::vector<std::uint16_t> x_labels;
  std::vector<std::uint16_t> y_labels;
  std::shared_ptr<const Constellation> constellation;
  std::optional<BitSource> bit_source;

  std::size_t size() const noexcept { return x.size(); }
  double average_power() const noexcept;
};

/// Reproducible bits from RandomStream(seed). n must be positive.
Bits generate_bits(std::size_t n, std::uint64_t seed);

/// Bits are consumed symbol pair by symbol pair: log2(M) bits for X, then
/// log2(M) bits for Y, each MSB-first into the label.
SymbolFrame map_bits(const Bits& bits, std::shared_ptr<const Constellation> constellation);

/// Hard minimum-distance demapping of a frame back to the bit order used by
/// map_bits.
Bits demap_hard(const SymbolFrame& frame, const Constellation& constellation);

/// Root-raised-cosine transfer function sampled on the grid bins, scaled so
/// that shaping followed by matched filtering returns the symbols exactly
/// (|H|^2 is samples_per_symbol times a raised cosine).
std::vector<double> rrc_transfer(const numerics::TimeGrid& grid, const TxConfig& tx);

/// Truncated time-domain taps of the same filter (rrc_span_symbols *
/// samples_per_symbol + 1 taps), centred.
std::vector<double> rrc_taps(const TxConfig& tx);

/// Upsamples and RRC-filters over the whole block (circular convolution).
SampledField shape(const SymbolFrame& frame, const TxConfig& tx);

/// RRC-matched filter and decimation. The zero-phase filters introduce no
/// group delay, so symbol k is read at sample k * sps + delay_hint (mod N).
/// A wrong delay_hint is accepted and simply degrades the result.
SymbolFrame matched_filter(const SampledField& field, const TxConfig& tx, int delay_hint = 0);

/// Adds white circular Gaussian noise calibrated against the back-to-back
/// chain. With share = 1 the noise level is such that
/// shape -> load_transceiver_noise -> matched_filter -> scalar_equalize ->
/// snr_estimate returns b2b_snr_db; with share < 1 only that fraction of the
/// noise variance is added, so tx and rx shares summing to 1 rebuild the
/// full floor. b2b_snr_db = +inf leaves the field unchanged.
SampledField load_transceiver_noise(SampledField field, double b2b_snr_db,
                                    unsigned samples_per_symbol, numerics::RandomStream& rng,
                                    double share = 1.0);
SampledField load_transceiver_noise(SampledField field, double b2b_snr_db,
                                    unsigned samples_per_symbol, std::uint64_t seed,
                                    double share = 1.0);

/// Per-polarisation complex scalar a = E[X conj(Y)] / E[|Y|^2] applied to Y.
SymbolFrame scalar_equalize(const SymbolFrame& rx, const SymbolFrame& tx);

}  // namespace obdbp::txrx
