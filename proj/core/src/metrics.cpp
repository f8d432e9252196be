#include "obdbp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace obdbp::metrics {
namespace {

void check_frames(const txrx::SymbolFrame& tx, const txrx::SymbolFrame& rx, const char* who) {
  if (tx.size() == 0 || rx.size() == 0) throw std::invalid_argument(std::string(who) + ": empty frame");
  if (tx.size() != rx.size() || tx.y.size() != rx.y.size() || tx.x.size() != tx.y.size()) {
    throw std::invalid_argument(std::string(who) + ": frame lengths differ");
  }
}

// log(sum(exp(v))) over the entries selected by mask bit == want.
double log_sum_exp(const double* v, unsigned n, unsigned bit_shift, unsigned want) {
  double peak = -std::numeric_limits<double>::infinity();
  for (unsigned g = 0; g < n; ++g) {
    if (((g >> bit_shift) & 1u) == want) peak = std::max(peak, v[g]);
  }
  double acc = 0.0;
  for (unsigned g = 0; g < n; ++g) {
    if (((g >> bit_shift) & 1u) == want) acc += std::exp(v[g] - peak);
  }
  return peak + std::log(acc);
}

// log2(1 + exp(z)) without overflow.
double softplus_bits(double z) {
  const double sp = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return sp / std::log(2.0);
}

double sorted_sum(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

SnrEstimate snr_estimate(const txrx::SymbolFrame& tx, const txrx::SymbolFrame& rx) {
  check_frames(tx, rx, "snr_estimate");
  double signal = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i < tx.size(); ++i) {
    signal += std::norm(tx.x[i]) + std::norm(tx.y[i]);
    error += std::norm(tx.x[i] - rx.x[i]) + std::norm(tx.y[i] - rx.y[i]);
  }
  if (error == 0.0) return {kSnrCapDb, true};
  if (signal == 0.0) throw std::invalid_argument("snr_estimate: transmitted frame has zero power");
  const double db = 10.0 * std::log10(signal / error);
  if (db >= kSnrCapDb) return {kSnrCapDb, true};
  return {db, false};
}

double evm_db(const txrx::SymbolFrame& tx, const txrx::SymbolFrame& rx) {
  check_frames(tx, rx, "evm_db");
  double signal = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i < tx.size(); ++i) {
    signal += std::norm(tx.x[i]) + std::norm(tx.y[i]);
    error += std::norm(tx.x[i] - rx.x[i]) + std::norm(tx.y[i] - rx.y[i]);
  }
  if (error == 0.0) return -kSnrCapDb;
  return 10.0 * std::log10(error / signal);
}

GmiEstimate gmi_polarisation(std::span<const std::uint16_t> tx_labels, std::span<const Complex> rx,
                             const txrx::Constellation& constellation) {
  if (tx_labels.size() != rx.size() || rx.empty()) {
    throw std::invalid_argument("gmi: label and sample counts differ or are zero");
  }
  const unsigned m = constellation.bits_per_symbol();
  const unsigned k = constellation.bits_per_axis();
  const unsigned levels = constellation.levels_per_axis();
  const auto& amp = constellation.axis_levels();

  double variance = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) variance += std::norm(constellation.point(tx_labels[i]) - rx[i]);
  variance /= static_cast<double>(rx.size());
  if (variance == 0.0) return {static_cast<double>(m), true};

  std::vector<double> metric(levels), weight(levels);
  // Bit metric penalty log2(1 + e^{-s LLR}) summed over the axis bits, with
  // LLR = log P(bit = 0) / P(bit = 1) and s = +1 for a transmitted 0.
  auto axis_penalty = [&](double v, unsigned tx_gray) {
    double peak = -std::numeric_limits<double>::infinity();
    for (unsigned g = 0; g < levels; ++g) {
      const double d = v - amp[g];
      metric[g] = -d * d / variance;
      peak = std::max(peak, metric[g]);
    }
    for (unsigned g = 0; g < levels; ++g) weight[g] = std::exp(metric[g] - peak);
    double total = 0.0;
    for (unsigned b = 0; b < k; ++b) {
      const unsigned shift = k - 1 - b;
      double s0 = 0.0, s1 = 0.0;
      for (unsigned g = 0; g < levels; ++g) ((g >> shift) & 1u ? s1 : s0) += weight[g];
      double llr;
      if (s0 > 0.0 && s1 > 0.0) {
        llr = std::log(s0) - std::log(s1);
      } else {
        // One subset underflowed relative to the peak; redo it in the log domain.
        llr = log_sum_exp(metric.data(), levels, shift, 0) - log_sum_exp(metric.data(), levels, shift, 1);
      }
      const double sign = ((tx_gray >> shift) & 1u) ? -1.0 : 1.0;
      total += softplus_bits(-sign * llr);
    }
    return total;
  };

  double penalty = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    const unsigned label = tx_labels[i];
    penalty += axis_penalty(rx[i].real(), label >> k) + axis_penalty(rx[i].imag(), label & (levels - 1));
  }
  const double gmi = static_cast<double>(m) - penalty / static_cast<double>(rx.size());
  return {std::clamp(gmi, 0.0, static_cast<double>(m)), false};
}

GmiEstimate gmi_estimate(const txrx::Bits& tx_bits, const txrx::SymbolFrame& rx,
                         const txrx::Constellation& constellation) {
  const unsigned m = constellation.bits_per_symbol();
  if (tx_bits.size() != rx.size() * 2 * m || rx.x.size() != rx.y.size()) {
    throw std::invalid_argument("gmi_estimate: bit count does not match the received frame");
  }
  std::vector<std::uint16_t> lx(rx.size()), ly(rx.size());
  for (std::size_t s = 0; s < rx.size(); ++s) {
    unsigned a = 0, b = 0;
    for (unsigned j = 0; j < m; ++j) {
      a = (a << 1) | tx_bits[2 * m * s + j];
      b = (b << 1) | tx_bits[2 * m * s + m + j];
    }
    lx[s] = static_cast<std::uint16_t>(a);
    ly[s] = static_cast<std::uint16_t>(b);
  }
  const auto gx = gmi_polarisation(lx, rx.x, constellation);
  const auto gy = gmi_polarisation(ly, rx.y, constellation);
  return {gx.bits + gy.bits, gx.noiseless && gy.noiseless};
}

double air(double gmi_bits_per_pdm_symbol, double symbol_rate_bd) {
  if (!(gmi_bits_per_pdm_symbol >= 0.0)) throw std::invalid_argument("air: GMI must be >= 0");
  return symbol_rate_bd * gmi_bits_per_pdm_symbol;
}

MetricsRecord aggregate(std::span<const MetricsRecord> records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  std::vector<double> snr_lin, gmi, air_values;
  std::size_t traces = 0;
  for (const auto& r : records) {
    if (!(r.coords == records.front().coords)) throw std::invalid_argument("aggregate: records have mixed coordinates");
    snr_lin.push_back(std::pow(10.0, r.snr_db / 10.0) * static_cast<double>(r.n_traces));
    gmi.push_back(r.gmi_bits * static_cast<double>(r.n_traces));
    air_values.push_back(r.air_bps * static_cast<double>(r.n_traces));
    traces += r.n_traces;
  }
  // Sorting before summation makes the result independent of input order.
  const double n = static_cast<double>(traces);
  MetricsRecord out;
  out.coords = records.front().coords;
  out.n_traces = traces;
  out.snr_db = 10.0 * std::log10(sorted_sum(std::move(snr_lin)) / n);
  out.gmi_bits = sorted_sum(std::move(gmi)) / n;
  out.air_bps = sorted_sum(std::move(air_values)) / n;
  return out;
}

}  // namespace obdbp::metrics
