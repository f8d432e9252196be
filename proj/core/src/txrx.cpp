#include "obdbp/txrx.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "obdbp/fft.hpp"

namespace obdbp::txrx {
namespace {

unsigned gray(unsigned i) noexcept { return i ^ (i >> 1); }

numerics::TimeGrid grid_for(const TxConfig& tx, std::size_t n_symbols) {
  return numerics::TimeGrid(n_symbols * tx.samples_per_symbol, tx.sample_rate_hz());
}

double raised_cosine(double f_abs, double symbol_rate, double rolloff) {
  const double f1 = 0.5 * (1.0 - rolloff) * symbol_rate;
  const double f2 = 0.5 * (1.0 + rolloff) * symbol_rate;
  if (f_abs <= f1) return 1.0;
  if (f_abs > f2) return 0.0;
  return 0.5 * (1.0 + std::cos(constants::kPi / (rolloff * symbol_rate) * (f_abs - f1)));
}

}  // namespace

Constellation::Constellation(unsigned order) : order_(order) {
  if (order != 4 && order != 16 && order != 64 && order != 256) {
    throw std::invalid_argument("constellation: unsupported QAM order " + std::to_string(order) +
                                " (expected 4, 16, 64 or 256)");
  }
  bits_per_symbol_ = static_cast<unsigned>(std::countr_zero(order));
  levels_ = 1u << (bits_per_symbol_ / 2);
  const double norm = std::sqrt(2.0 * (order - 1) / 3.0);

  // Position j counts downward from the largest amplitude; its Gray code is
  // the axis label.
  axis_levels_.assign(levels_, 0.0);
  for (unsigned j = 0; j < levels_; ++j) {
    axis_levels_[gray(j)] = (static_cast<double>(levels_ - 1) - 2.0 * j) / norm;
  }
  points_.resize(order);
  const unsigned k = bits_per_symbol_ / 2;
  for (unsigned label = 0; label < order; ++label) {
    points_[label] = {axis_levels_[label >> k], axis_levels_[label & (levels_ - 1)]};
  }
}

unsigned Constellation::decide(Complex y) const noexcept {
  auto nearest = [&](double v) {
    unsigned best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (unsigned g = 0; g < levels_; ++g) {
      const double d = std::abs(v - axis_levels_[g]);
      if (d < best_d) {
        best_d = d;
        best = g;
      }
    }
    return best;
  };
  return (nearest(y.real()) << (bits_per_symbol_ / 2)) | nearest(y.imag());
}

Constellation build_constellation(unsigned order) { return Constellation(order); }

void TxConfig::validate() const {
  if (!(symbol_rate_bd > 0.0)) throw std::invalid_argument("tx: symbol rate must be positive");
  if (!(rolloff > 0.0 && rolloff <= 1.0)) throw std::invalid_argument("tx: rolloff must be in (0, 1]");
  if (samples_per_symbol < 2) throw std::invalid_argument("tx: samples_per_symbol must be >= 2");
  if (n_symbols == 0) throw std::invalid_argument("tx: n_symbols must be positive");
  if ((1.0 + rolloff) * symbol_rate_bd > sample_rate_hz() * (1.0 + 1e-12)) {
    throw std::invalid_argument("tx: occupied bandwidth exceeds the sample rate");
  }
}

double SymbolFrame::average_power() const noexcept {
  if (x.empty()) return 0.0;
  double p = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) p += std::norm(x[i]) + std::norm(y[i]);
  return p / static_cast<double>(x.size());
}

Bits generate_bits(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("generate_bits: n must be positive");
  numerics::RandomStream rng(seed);
  Bits bits(n);
  std::size_t i = 0;
  while (i < n) {
    std::uint64_t word = rng.next_u64();
    for (int b = 0; b < 64 && i < n; ++b, ++i) {
      bits[i] = static_cast<std::uint8_t>((word >> 63) & 1u);
      word <<= 1;
    }
  }
  return bits;
}

SymbolFrame map_bits(const Bits& bits, std::shared_ptr<const Constellation> constellation) {
  if (!constellation) throw std::invalid_argument("map_bits: null constellation");
  const unsigned m = constellation->bits_per_symbol();
  if (bits.empty() || bits.size() % (2 * m) != 0) {
    throw std::invalid_argument("map_bits: bit count must be a positive multiple of 2*log2(M)");
  }
  const std::size_t n = bits.size() / (2 * m);
  SymbolFrame frame;
  frame.x.resize(n);
  frame.y.resize(n);
  frame.x_labels.resize(n);
  frame.y_labels.resize(n);
  auto read_label = [&](std::size_t offset) {
    unsigned label = 0;
    for (unsigned b = 0; b < m; ++b) label = (label << 1) | (bits[offset + b] & 1u);
    return label;
  };
  for (std::size_t k = 0; k < n; ++k) {
    const unsigned lx = read_label(2 * m * k);
    const unsigned ly = read_label(2 * m * k + m);
    frame.x_labels[k] = static_cast<std::uint16_t>(lx);
    frame.y_labels[k] = static_cast<std::uint16_t>(ly);
    frame.x[k] = constellation->point(lx);
    frame.y[k] = constellation->point(ly);
  }
  frame.constellation = std::move(constellation);
  return frame;
}

Bits demap_hard(const SymbolFrame& frame, const Constellation& constellation) {
  const unsigned m = constellation.bits_per_symbol();
  Bits bits(frame.size() * 2 * m);
  auto write_label = [&](std::size_t offset, unsigned label) {
    for (unsigned b = 0; b < m; ++b) bits[offset + b] = static_cast<std::uint8_t>(constellation.label_bit(label, b));
  };
  for (std::size_t k = 0; k < frame.size(); ++k) {
    write_label(2 * m * k, constellation.decide(frame.x[k]));
    write_label(2 * m * k + m, constellation.decide(frame.y[k]));
  }
  return bits;
}

std::vector<double> rrc_transfer(const numerics::TimeGrid& grid, const TxConfig& tx) {
  std::vector<double> h(grid.size());
  const double sps = grid.sample_rate_hz() / tx.symbol_rate_bd;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double rc = raised_cosine(std::abs(grid.frequency_hz(k)), tx.symbol_rate_bd, tx.rolloff);
    h[k] = std::sqrt(sps * rc);
  }
  return h;
}

std::vector<double> rrc_taps(const TxConfig& tx) {
  const double beta = tx.rolloff;
  const int sps = static_cast<int>(tx.samples_per_symbol);
  const int half = static_cast<int>(tx.rrc_span_symbols) * sps / 2;
  std::vector<double> taps(static_cast<std::size_t>(2 * half + 1));
  const double scale = 1.0 / std::sqrt(static_cast<double>(sps));
  for (int n = -half; n <= half; ++n) {
    const double t = static_cast<double>(n) / sps;  // in symbol periods
    double v;
    if (n == 0) {
      v = 1.0 - beta + 4.0 * beta / constants::kPi;
    } else if (std::abs(std::abs(4.0 * beta * t) - 1.0) < 1e-12) {
      const double a = constants::kPi / (4.0 * beta);
      v = beta / std::sqrt(2.0) *
          ((1.0 + 2.0 / constants::kPi) * std::sin(a) + (1.0 - 2.0 / constants::kPi) * std::cos(a));
    } else {
      const double num = std::sin(constants::kPi * t * (1.0 - beta)) +
                         4.0 * beta * t * std::cos(constants::kPi * t * (1.0 + beta));
      const double den = constants::kPi * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
      v = num / den;
    }
    taps[static_cast<std::size_t>(n + half)] = scale * v;
  }
  return taps;
}

SampledField shape(const SymbolFrame& frame, const TxConfig& tx) {
  tx.validate();
  if (frame.y.size() != frame.x.size()) throw std::invalid_argument("shape: polarisation lengths differ");
  const auto grid = grid_for(tx, frame.size());
  SampledField field(grid);
  const std::size_t sps = tx.samples_per_symbol;
  for (std::size_t k = 0; k < frame.size(); ++k) {
    field.x[k * sps] = frame.x[k];
    field.y[k * sps] = frame.y[k];
  }
  const auto h = rrc_transfer(grid, tx);
  numerics::fft_forward(field.x);
  numerics::fft_forward(field.y);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    field.x[k] *= h[k];
    field.y[k] *= h[k];
  }
  numerics::fft_inverse(field.x);
  numerics::fft_inverse(field.y);
  return field;
}

SymbolFrame matched_filter(const SampledField& field, const TxConfig& tx, int delay_hint) {
  const double ratio = field.grid.sample_rate_hz() / tx.symbol_rate_bd;
  const double sps_rounded = std::round(ratio);
  if (sps_rounded < 1.0 || std::abs(ratio - sps_rounded) > 1e-9 * ratio) {
    throw std::invalid_argument("matched_filter: sample rate is not an integer multiple of the symbol rate");
  }
  const auto sps = static_cast<std::size_t>(sps_rounded);
  const auto h = rrc_transfer(field.grid, tx);
  std::vector<Complex> fx = field.x;
  std::vector<Complex> fy = field.y;
  numerics::fft_forward(fx);
  numerics::fft_forward(fy);
  for (std::size_t k = 0; k < fx.size(); ++k) {
    fx[k] *= h[k];
    fy[k] *= h[k];
  }
  numerics::fft_inverse(fx);
  numerics::fft_inverse(fy);

  const auto n = static_cast<std::ptrdiff_t>(field.size());
  const std::size_t n_sym = field.size() / sps;
  SymbolFrame out;
  out.x.resize(n_sym);
  out.y.resize(n_sym);
  for (std::size_t k = 0; k < n_sym; ++k) {
    auto idx = (static_cast<std::ptrdiff_t>(k * sps) + delay_hint) % n;
    if (idx < 0) idx += n;
    out.x[k] = fx[static_cast<std::size_t>(idx)];
    out.y[k] = fy[static_cast<std::size_t>(idx)];
  }
  return out;
}

SampledField load_transceiver_noise(SampledField field, double b2b_snr_db,
                                    unsigned samples_per_symbol, numerics::RandomStream& rng,
                                    double share) {
  if (std::isinf(b2b_snr_db) && b2b_snr_db > 0) return field;
  if (!std::isfinite(b2b_snr_db)) throw std::invalid_argument("transceiver noise: SNR must be finite or +inf");
  if (!(share >= 0.0 && share <= 1.0)) throw std::invalid_argument("transceiver noise: share must be in [0, 1]");
  const double power = field.average_power_w();
  if (!(power > 0.0)) throw std::invalid_argument("transceiver noise: field has zero power");
  const double snr = numerics::db_to_linear(b2b_snr_db);
  if (!(snr > 1.0)) throw std::invalid_argument("transceiver noise: SNR must exceed 0 dB");
  // After the matched filter the per-polarisation symbol power is
  // sps * P/2 while white noise keeps its per-sample variance. The scalar
  // equaliser then reports 1 + SNR_true, hence the (snr - 1).
  const double variance = share * samples_per_symbol * 0.5 * power / (snr - 1.0);
  numerics::add_gaussian_noise(field, variance, rng);
  return field;
}

SampledField load_transceiver_noise(SampledField field, double b2b_snr_db,
                                    unsigned samples_per_symbol, std::uint64_t seed, double share) {
  numerics::RandomStream rng(seed);
  return load_transceiver_noise(std::move(field), b2b_snr_db, samples_per_symbol, rng, share);
}

SymbolFrame scalar_equalize(const SymbolFrame& rx, const SymbolFrame& tx) {
  if (rx.size() != tx.size() || rx.y.size() != tx.y.size()) {
    throw std::invalid_argument("scalar_equalize: frame lengths differ");
  }
  auto tap = [](const std::vector<Complex>& ref, const std::vector<Complex>& obs) {
    Complex cross = 0.0;
    double power = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      cross += ref[i] * std::conj(obs[i]);
      power += std::norm(obs[i]);
    }
    if (!(power > 0.0)) throw std::invalid_argument("scalar_equalize: received polarisation has zero power");
    return cross / power;
  };
  const Complex ax = tap(tx.x, rx.x);
  const Complex ay = tap(tx.y, rx.y);
  SymbolFrame out;
  out.x.resize(rx.size());
  out.y.resize(rx.size());
  for (std::size_t i = 0; i < rx.size(); ++i) {
    out.x[i] = ax * rx.x[i];
    out.y[i] = ay * rx.y[i];
  }
  return out;
}

}  // namespace obdbp::txrx
