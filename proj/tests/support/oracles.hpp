#pragma once

// Reference computations written independently of the library code paths
// they check. Shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <cstddef>
#include <vector>

namespace oracle {

using cd = std::complex<double>;

/// Bit-wise GMI (bits per 2D symbol) of one polarisation on an AWGN channel
/// with complex noise variance `noise_var`, by direct 2D quadrature of
///   m - (1/M) sum_j E_{y|s_j} sum_k log2(1 + sum_{i: b_k(i) != b_k(j)} p(y|s_i)
///                                          / sum_{i: b_k(i) == b_k(j)} p(y|s_i)).
/// points[label] is the point carrying `label`, labels are m bits wide.
/// The integral for each transmitted point is taken over +-extent standard
/// deviations around it with `per_sigma` nodes per standard deviation
/// (midpoint rule on a Gaussian, which converges spectrally).
inline double gmi_awgn(const std::vector<cd>& points, double noise_var, double extent = 7.0,
                       int per_sigma = 10) {
  const std::size_t M = points.size();
  unsigned m = 0;
  while ((1u << m) < M) ++m;
  const double s = std::sqrt(noise_var / 2.0);  // per real dimension
  const int half = static_cast<int>(extent * per_sigma);
  const double h = 1.0 / per_sigma;             // in units of s
  std::vector<double> lik(M);
  double penalty = 0.0;
  for (std::size_t j = 0; j < M; ++j) {
    double acc = 0.0;
    for (int a = -half; a < half; ++a) {
      const double u = (a + 0.5) * h;
      for (int b = -half; b < half; ++b) {
        const double v = (b + 0.5) * h;
        const double w = std::exp(-0.5 * (u * u + v * v)) * h * h / (2.0 * std::numbers::pi);
        const cd y = points[j] + cd(u * s, v * s);
        // Likelihoods relative to the transmitted point keep exp() in range.
        for (std::size_t i = 0; i < M; ++i) {
          lik[i] = std::exp(-(std::norm(y - points[i]) - std::norm(y - points[j])) / noise_var);
        }
        double bits = 0.0;
        for (unsigned k = 0; k < m; ++k) {
          const unsigned mask = 1u << (m - 1 - k);
          double same = 0.0, other = 0.0;
          for (std::size_t i = 0; i < M; ++i) ((i & mask) == (j & mask) ? same : other) += lik[i];
          bits += std::log2(1.0 + other / same);
        }
        acc += w * bits;
      }
    }
    penalty += acc;
  }
  return m - penalty / static_cast<double>(M);
}

/// Brute-force per-symbol GMI estimate: full 2D log-sum-exp over every
/// constellation point with the given fitted variance (no per-axis
/// factorisation). Mirrors the estimator's definition, not its code.
inline double gmi_bruteforce(const std::vector<cd>& points, const std::vector<unsigned>& labels,
                             const std::vector<cd>& rx, double noise_var) {
  const std::size_t M = points.size();
  unsigned m = 0;
  while ((1u << m) < M) ++m;
  std::vector<double> metric(M);
  double penalty = 0.0;
  for (std::size_t n = 0; n < rx.size(); ++n) {
    double peak = -1e300;
    for (std::size_t i = 0; i < M; ++i) {
      metric[i] = -std::norm(rx[n] - points[i]) / noise_var;
      peak = std::max(peak, metric[i]);
    }
    for (unsigned k = 0; k < m; ++k) {
      const unsigned mask = 1u << (m - 1 - k);
      double same = 0.0, other = 0.0;
      for (std::size_t i = 0; i < M; ++i) ((i & mask) == (labels[n] & mask) ? same : other) += std::exp(metric[i] - peak);
      penalty += std::log2(1.0 + other / same);
    }
  }
  return m - penalty / static_cast<double>(rx.size());
}

/// RMS width of a chirp-free Gaussian pulse exp(-t^2 / (2 T0^2)) after
/// propagation through dispersion beta2 * L (ps^2): T0 sqrt(1 + (b2L/T0^2)^2).
inline double gaussian_width_after(double t0_ps, double beta2_l_ps2) {
  const double r = beta2_l_ps2 / (t0_ps * t0_ps);
  return t0_ps * std::sqrt(1.0 + r * r);
}

/// Linear-domain mean of dB values.
inline double mean_db(const std::vector<double>& db) {
  double s = 0.0;
  for (double v : db) s += std::pow(10.0, v / 10.0);
  return 10.0 * std::log10(s / static_cast<double>(db.size()));
}

}  // namespace oracle
