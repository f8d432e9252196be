#include "obdbp/dsp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "obdbp/fft.hpp"
#include "obdbp/metrics.hpp"
#include "obdbp/parallel.hpp"

namespace obdbp::dsp {
namespace {

// exp(-i c |u|^2) per sample, Manakov uses the polarisation-summed power
// (8/9 folded in by apply_nonlinear), scalar mode each polarisation's own.
SampledField derotate(SampledField field, double coefficient, channel::NonlinearMode mode) {
  return channel::apply_nonlinear(std::move(field), -coefficient, 1.0, mode);
}

SampledField scaled(SampledField field, double s) {
  for (auto& v : field.x) v *= s;
  for (auto& v : field.y) v *= s;
  return field;
}

}  // namespace

void DbpConfig::validate() const {
  if (!(kappa >= 0.0 && kappa <= 1.0)) throw std::invalid_argument("dbp: kappa must be in [0, 1]");
  if (!(gamma_dbp_per_w_km >= 0.0)) throw std::invalid_argument("dbp: gamma_dbp must be >= 0");
  if (!std::isfinite(d_dbp_ps_nm_km)) throw std::invalid_argument("dbp: dispersion must be finite");
  if (mode == DbpMode::kMultiStep && steps_per_span == 0) {
    throw std::invalid_argument("dbp: multi-step mode needs steps_per_span >= 1");
  }
}

double LinkKnowledge::total_length_km() const noexcept {
  double l = 0.0;
  for (const auto& s : spans) l += s.length_km;
  return l;
}

double LinkKnowledge::nonlinear_weight_w_km() const noexcept {
  double w = 0.0;
  for (const auto& s : spans) w += s.launch_power_w * channel::effective_length(s.alpha_db_per_km, s.length_km);
  return w;
}

LinkKnowledge LinkKnowledge::from_provenance(const channel::LinkProvenance& provenance) {
  LinkKnowledge k;
  k.wavelength_nm = provenance.wavelength_nm;
  for (const auto& s : provenance.spans) k.spans.push_back({s.length_km, s.alpha_db_per_km, s.launch_power_w});
  return k;
}

SampledField edc(SampledField field, const LinkKnowledge& link, double d_ps_nm_km) {
  const double beta2 = channel::dispersion_to_beta2(d_ps_nm_km, link.wavelength_nm);
  return channel::apply_dispersion(std::move(field), -beta2, link.total_length_km());
}

SampledField dbp_single_step_wh(SampledField field, const LinkKnowledge& link, const DbpConfig& cfg) {
  cfg.validate();
  if (cfg.mode != DbpMode::kSingleStepWh) throw std::invalid_argument("dbp_single_step_wh: wrong mode");
  const double beta2 = channel::dispersion_to_beta2(cfg.d_dbp_ps_nm_km, link.wavelength_nm);
  const double length = link.total_length_km();

  if (cfg.kappa > 0.0) field = channel::apply_dispersion(std::move(field), -beta2, cfg.kappa * length);

  const double power = field.average_power_w();
  if (!(power > 0.0)) throw std::invalid_argument("dbp_single_step_wh: field has zero power");
  // |u~|^2 = |u|^2 / power, so the coefficient on |u|^2 carries 1 / power.
  const double coefficient = cfg.gamma_dbp_per_w_km * link.nonlinear_weight_w_km() / power;
  field = derotate(std::move(field), coefficient, cfg.nonlinear);

  if (cfg.kappa < 1.0) field = channel::apply_dispersion(std::move(field), -beta2, (1.0 - cfg.kappa) * length);
  return field;
}

SampledField dbp_multi_step(SampledField field, const LinkKnowledge& link, const DbpConfig& cfg) {
  cfg.validate();
  if (cfg.mode != DbpMode::kMultiStep) throw std::invalid_argument("dbp_multi_step: wrong mode");
  const double input_power = field.average_power_w();
  if (!(input_power > 0.0)) throw std::invalid_argument("dbp_multi_step: field has zero power");
  const double beta2 = channel::dispersion_to_beta2(cfg.d_dbp_ps_nm_km, link.wavelength_nm);
  const unsigned n = cfg.steps_per_span;

  for (auto it = link.spans.rbegin(); it != link.spans.rend(); ++it) {
    const double h = it->length_km / n;
    const double leff = channel::effective_length(it->alpha_db_per_km, h);
    const double step_gain = std::pow(10.0, it->alpha_db_per_km * h / 20.0);
    const double span_out_power = it->launch_power_w * std::pow(10.0, -it->alpha_db_per_km * it->length_km / 10.0);
    field = numerics::set_average_power(std::move(field), span_out_power);

    // Mirror of the forward symmetric step: D(-h/2), undo loss, derotate at
    // the step's input power, D(-h/2); adjacent half steps are merged.
    field = channel::apply_dispersion(std::move(field), -beta2, 0.5 * h);
    for (unsigned s = 0; s < n; ++s) {
      field = scaled(std::move(field), step_gain);
      field = derotate(std::move(field), cfg.gamma_dbp_per_w_km * leff, cfg.nonlinear);
      field = channel::apply_dispersion(std::move(field), -beta2, s + 1 == n ? 0.5 * h : h);
    }
  }
  return numerics::set_average_power(std::move(field), input_power);
}

SampledField digital_backpropagation(SampledField field, const LinkKnowledge& link, const DbpConfig& cfg) {
  return cfg.mode == DbpMode::kSingleStepWh ? dbp_single_step_wh(std::move(field), link, cfg)
                                            : dbp_multi_step(std::move(field), link, cfg);
}

DbpSweepResult dbp_param_sweep(const std::vector<DbpTrace>& traces, const LinkKnowledge& link,
                               const txrx::TxConfig& tx, const DbpConfig& base,
                               const std::vector<double>& d_grid, const std::vector<double>& gamma_grid,
                               const DbpSweepOptions& options) {
  if (traces.empty()) throw std::invalid_argument("dbp_param_sweep: no traces");
  if (d_grid.empty() || gamma_grid.empty()) throw std::invalid_argument("dbp_param_sweep: empty grid");

  auto trace_snr = [&](const SampledField& processed, const txrx::SymbolFrame& sent) {
    const auto rx = txrx::scalar_equalize(txrx::matched_filter(processed, tx), sent);
    return std::pow(10.0, metrics::snr_estimate(sent, rx).db / 10.0);
  };
  auto mean_db = [&](const std::vector<double>& lin) {
    double s = 0.0;
    for (double v : lin) s += v;
    return 10.0 * std::log10(s / static_cast<double>(lin.size()));
  };

  const std::size_t nd = d_grid.size();
  const std::size_t ng = gamma_grid.size();
  std::vector<double> edc_snr(nd);
  std::vector<double> dbp_snr(nd * ng);

  // Jobs: one EDC evaluation per d, one DBP evaluation per grid point.
  parallel_for(nd * (ng + 1), options.threads, [&](std::size_t job) {
    const std::size_t di = job / (ng + 1);
    const std::size_t gi = job % (ng + 1);
    std::vector<double> lin(traces.size());
    for (std::size_t t = 0; t < traces.size(); ++t) {
      if (gi == ng) {
        lin[t] = trace_snr(edc(traces[t].received, link, d_grid[di]), traces[t].transmitted);
      } else {
        DbpConfig cfg = base;
        cfg.d_dbp_ps_nm_km = d_grid[di];
        cfg.gamma_dbp_per_w_km = gamma_grid[gi];
        lin[t] = trace_snr(digital_backpropagation(traces[t].received, link, cfg), traces[t].transmitted);
      }
    }
    (gi == ng ? edc_snr[di] : dbp_snr[di * ng + gi]) = mean_db(lin);
  });

  DbpSweepResult result;
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < nd; ++i) {
    for (std::size_t j = 0; j < ng; ++j) {
      const double snr = dbp_snr[i * ng + j];
      result.map.push_back({d_grid[i], gamma_grid[j], snr, snr - edc_snr[i]});
      peak = std::max(peak, snr);
    }
  }
  const DbpSweepPoint* best = nullptr;
  for (const auto& p : result.map) {
    if (p.snr_db < peak - options.tie_tolerance_db) continue;
    const bool better =
        !best || std::abs(p.gamma_dbp_per_w_km) < std::abs(best->gamma_dbp_per_w_km) ||
        (std::abs(p.gamma_dbp_per_w_km) == std::abs(best->gamma_dbp_per_w_km) &&
         (std::abs(p.d_dbp_ps_nm_km) < std::abs(best->d_dbp_ps_nm_km) ||
          (std::abs(p.d_dbp_ps_nm_km) == std::abs(best->d_dbp_ps_nm_km) && p.snr_db > best->snr_db)));
    if (better) best = &p;
  }
  result.best_d_ps_nm_km = best->d_dbp_ps_nm_km;
  result.best_gamma_per_w_km = best->gamma_dbp_per_w_km;
  result.best_snr_db = best->snr_db;
  for (std::size_t i = 0; i < nd; ++i) {
    if (d_grid[i] == best->d_dbp_ps_nm_km) result.edc_snr_db = edc_snr[i];
  }
  return result;
}

}  // namespace obdbp::dsp
