#include "obdbp/channel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "obdbp/fft.hpp"

namespace obdbp::channel {
namespace {

using numerics::TimeGrid;

std::vector<Complex> dispersion_transfer(const TimeGrid& grid, double beta2, double length_km) {
  std::vector<Complex> h(grid.size());
  const double k = 0.5 * beta2 * length_km;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = grid.omega_rad_per_ps(i);
    h[i] = std::polar(1.0, k * w * w);
  }
  return h;
}

void multiply(SampledField& spectrum, const std::vector<Complex>& h) {
  for (std::size_t i = 0; i < h.size(); ++i) {
    spectrum.x[i] *= h[i];
    spectrum.y[i] *= h[i];
  }
}

void dispersion_in_place(SampledField& field, const std::vector<Complex>& h) {
  numerics::to_frequency_domain(field);
  multiply(field, h);
  numerics::to_time_domain(field);
}

void nonlinear_in_place(SampledField& field, double phase_coefficient, NonlinearMode mode) {
  if (phase_coefficient == 0.0) return;
  if (mode == NonlinearMode::kManakov) {
    const double c = kManakovFactor * phase_coefficient;
    for (std::size_t i = 0; i < field.size(); ++i) {
      const Complex rot = std::polar(1.0, c * (std::norm(field.x[i]) + std::norm(field.y[i])));
      field.x[i] *= rot;
      field.y[i] *= rot;
    }
  } else {
    for (std::size_t i = 0; i < field.size(); ++i) {
      field.x[i] *= std::polar(1.0, phase_coefficient * std::norm(field.x[i]));
      field.y[i] *= std::polar(1.0, phase_coefficient * std::norm(field.y[i]));
    }
  }
}

void scale_in_place(SampledField& field, double s) {
  for (auto& v : field.x) v *= s;
  for (auto& v : field.y) v *= s;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

void FiberSpan::validate() const {
  if (!(length_km > 0.0)) throw std::invalid_argument("fiber span: length must be positive");
  if (!(alpha_db_per_km >= 0.0)) throw std::invalid_argument("fiber span: attenuation must be >= 0");
  if (!(gamma_per_w_km >= 0.0)) throw std::invalid_argument("fiber span: gamma must be >= 0");
  if (!std::isfinite(dispersion_ps_nm_km)) throw std::invalid_argument("fiber span: dispersion must be finite");
}

AmplifierProfile::AmplifierProfile(std::vector<ProfileRow> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw std::invalid_argument("amplifier profile: no rows");
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& r = rows_[i];
    if (!std::isfinite(r.gain_db) || !std::isfinite(r.wavelength_nm)) {
      throw std::invalid_argument("amplifier profile: non-finite value in row " + std::to_string(i + 1));
    }
    if (!(r.nf_db >= 0.0)) {
      throw std::invalid_argument("amplifier profile: negative noise figure in row " + std::to_string(i + 1));
    }
    if (i > 0 && !(r.wavelength_nm > rows_[i - 1].wavelength_nm)) {
      throw std::invalid_argument("amplifier profile: wavelengths not strictly increasing at row " +
                                  std::to_string(i + 1));
    }
  }
}

AmplifierProfile parse_amplifier_profile(std::istream& in, const std::string& source_name) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::vector<ProfileRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != "wavelength_nm,gain_db,nf_db") {
        throw std::invalid_argument(source_name + ":" + std::to_string(line_no) +
                                    ": expected header 'wavelength_nm,gain_db,nf_db'");
      }
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        const std::string t = trim(cell);
        values.push_back(std::stod(t, &used));
        if (used != t.size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw std::invalid_argument(source_name + ":" + std::to_string(line_no) + ": malformed number '" +
                                    cell + "'");
      }
    }
    if (values.size() != 3) {
      throw std::invalid_argument(source_name + ":" + std::to_string(line_no) + ": expected 3 columns");
    }
    rows.push_back({values[0], values[1], values[2]});
  }
  if (!header_seen) throw std::invalid_argument(source_name + ": empty amplifier profile");
  try {
    return AmplifierProfile(std::move(rows));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(source_name + ": " + e.what());
  }
}

AmplifierProfile load_amplifier_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open amplifier profile " + path.string());
  return parse_amplifier_profile(in, path.string());
}

GainNf profile_lookup(const AmplifierProfile& profile, double wavelength_nm) {
  const auto& rows = profile.rows();
  if (rows.empty() || wavelength_nm < rows.front().wavelength_nm || wavelength_nm > rows.back().wavelength_nm) {
    throw std::invalid_argument("profile_lookup: wavelength " + std::to_string(wavelength_nm) +
                                " nm outside profile range");
  }
  auto hi = std::lower_bound(rows.begin(), rows.end(), wavelength_nm,
                             [](const ProfileRow& r, double w) { return r.wavelength_nm < w; });
  if (hi->wavelength_nm == wavelength_nm) return {hi->gain_db, hi->nf_db};
  const auto lo = std::prev(hi);
  const double t = (wavelength_nm - lo->wavelength_nm) / (hi->wavelength_nm - lo->wavelength_nm);
  return {lo->gain_db + t * (hi->gain_db - lo->gain_db), lo->nf_db + t * (hi->nf_db - lo->nf_db)};
}

double AmplifierSpec::noise_figure_db(double wavelength_nm) const {
  if (profile) return profile_lookup(*profile, wavelength_nm).nf_db;
  return nf_db;
}

double resolve_lop2_dbm(const LopTable& table, double lop1_dbm) {
  const auto& rows = table.rows;
  if (rows.empty()) throw std::invalid_argument("LOP table is empty");
  if (lop1_dbm < rows.front().first || lop1_dbm > rows.back().first) {
    throw std::invalid_argument("LOP1 " + std::to_string(lop1_dbm) + " dBm outside the LOP table range [" +
                                std::to_string(rows.front().first) + ", " + std::to_string(rows.back().first) +
                                "] dBm");
  }
  auto hi = std::lower_bound(rows.begin(), rows.end(), lop1_dbm,
                             [](const auto& r, double p) { return r.first < p; });
  if (hi->first == lop1_dbm) return hi->second;
  const auto lo = std::prev(hi);
  const double t = (lop1_dbm - lo->first) / (hi->first - lo->first);
  return lo->second + t * (hi->second - lo->second);
}

void LinkConfig::validate() const {
  if (spans.empty()) throw std::invalid_argument("link: at least one span is required");
  for (const auto& s : spans) s.validate();
  if (const auto* table = std::get_if<LopTable>(&lop2_rule)) {
    for (std::size_t i = 1; i < table->rows.size(); ++i) {
      if (!(table->rows[i].first > table->rows[i - 1].first)) {
        throw std::invalid_argument("link: LOP table rows must be sorted by LOP1");
      }
    }
    if (spans.size() > 1) resolve_lop2_dbm(*table, lop1_dbm);
  }
  if (mid_amp.profile) profile_lookup(*mid_amp.profile, signal_wavelength_nm);
}

double dispersion_to_beta2(double d_ps_nm_km, double wavelength_nm) noexcept {
  return -d_ps_nm_km * wavelength_nm * wavelength_nm /
         (2.0 * constants::kPi * constants::kSpeedOfLightNmPerPs);
}

SampledField apply_dispersion(SampledField field, double beta2_ps2_per_km, double length_km) {
  dispersion_in_place(field, dispersion_transfer(field.grid, beta2_ps2_per_km, length_km));
  return field;
}

SampledField apply_nonlinear(SampledField field, double gamma_per_w_km, double eff_length_km,
                             NonlinearMode mode) {
  if (eff_length_km < 0.0) throw std::invalid_argument("apply_nonlinear: effective length must be >= 0");
  nonlinear_in_place(field, gamma_per_w_km * eff_length_km, mode);
  return field;
}

SampledField apply_attenuation(SampledField field, double alpha_db_per_km, double length_km) {
  scale_in_place(field, std::pow(10.0, -alpha_db_per_km * length_km / 20.0));
  return field;
}

double alpha_linear_per_km(double alpha_db_per_km) noexcept {
  return alpha_db_per_km * std::log(10.0) / 10.0;
}

double effective_length(double alpha_db_per_km, double length_km) noexcept {
  const double a = alpha_linear_per_km(alpha_db_per_km);
  if (a == 0.0) return length_km;
  if (std::isinf(length_km)) return 1.0 / a;
  return -std::expm1(-a * length_km) / a;
}

std::vector<double> ssfm_step_lengths(const FiberSpan& span, const SsfmConfig& cfg, double power_w) {
  const double eta = cfg.mode == NonlinearMode::kManakov ? kManakovFactor : 1.0;
  if (cfg.steps_per_span > 0) {
    return std::vector<double>(cfg.steps_per_span, span.length_km / cfg.steps_per_span);
  }
  if (!(cfg.max_phase_per_step_rad > 0.0)) throw std::invalid_argument("ssfm: phase bound must be positive");
  const double leff_total = effective_length(span.alpha_db_per_km, span.length_km);
  const double total_phase = eta * span.gamma_per_w_km * power_w * leff_total;
  const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(total_phase / cfg.max_phase_per_step_rad)));
  // Equal nonlinear phase per step: boundaries where the accumulated
  // effective length reaches j / n of the span total.
  const double a = alpha_linear_per_km(span.alpha_db_per_km);
  std::vector<double> lengths(n);
  double z_prev = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    double z = span.length_km;
    if (j < n) {
      const double frac = static_cast<double>(j) / static_cast<double>(n);
      z = a == 0.0 ? frac * span.length_km : -std::log1p(-frac * a * leff_total) / a;
    }
    lengths[j - 1] = z - z_prev;
    z_prev = z;
  }
  return lengths;
}

SampledField ssfm_propagate(SampledField field, const FiberSpan& span, const SsfmConfig& cfg,
                            SsfmReport* report) {
  span.validate();
  const double eta = cfg.mode == NonlinearMode::kManakov ? kManakovFactor : 1.0;
  const double power = field.average_power_w();
  const auto steps = ssfm_step_lengths(span, cfg, power);
  const double beta2 = dispersion_to_beta2(span.dispersion_ps_nm_km, span.ref_wavelength_nm);
  const bool dispersive = beta2 != 0.0;
  const bool uniform = std::all_of(steps.begin(), steps.end(), [&](double h) { return h == steps.front(); });

  if (report) {
    report->steps = static_cast<unsigned>(steps.size());
    report->max_step_phase_rad =
        eta * span.gamma_per_w_km * power * effective_length(span.alpha_db_per_km, steps.front());
    report->phase_bound_exceeded = report->max_step_phase_rad > cfg.max_phase_per_step_rad * (1.0 + 1e-9);
  }

  // Symmetric steps with the trailing half of step s merged into the
  // leading half of step s + 1: one transform pair per step, plus one.
  std::vector<Complex> half, full;
  if (dispersive && uniform) {
    half = dispersion_transfer(field.grid, beta2, 0.5 * steps.front());
    full = dispersion_transfer(field.grid, beta2, steps.front());
  }
  auto dispersion_segment = [&](double length_km, bool is_half) {
    if (!dispersive) return;
    if (uniform) {
      dispersion_in_place(field, is_half ? half : full);
    } else {
      dispersion_in_place(field, dispersion_transfer(field.grid, beta2, length_km));
    }
  };

  dispersion_segment(0.5 * steps.front(), true);
  for (std::size_t s = 0; s < steps.size(); ++s) {
    const double h = steps[s];
    nonlinear_in_place(field, span.gamma_per_w_km * effective_length(span.alpha_db_per_km, h), cfg.mode);
    scale_in_place(field, std::pow(10.0, -span.alpha_db_per_km * h / 20.0));
    const bool last = s + 1 == steps.size();
    dispersion_segment(last ? 0.5 * h : 0.5 * (h + steps[s + 1]), last);
  }
  return field;
}

double ase_psd_per_pol(double gain_db, double nf_db, double wavelength_nm) noexcept {
  const double g = numerics::db_to_linear(gain_db);
  const double f = numerics::db_to_linear(nf_db);
  const double nu = constants::kSpeedOfLight / (wavelength_nm * 1e-9);
  return (g * f - 1.0) * constants::kPlanck * nu / 2.0;
}

SampledField amplify(SampledField field, double gain_db, double nf_db, double wavelength_nm,
                     numerics::RandomStream& rng) {
  if (!(gain_db >= 0.0)) throw std::invalid_argument("amplify: gain must be >= 0 dB");
  if (!(nf_db >= 0.0)) throw std::invalid_argument("amplify: noise figure must be >= 0 dB");
  scale_in_place(field, std::pow(10.0, gain_db / 20.0));
  const double variance = std::max(0.0, ase_psd_per_pol(gain_db, nf_db, wavelength_nm)) *
                          field.grid.sample_rate_hz();
  numerics::add_gaussian_noise(field, variance, rng);
  return field;
}

SampledField amplify(SampledField field, double gain_db, double nf_db, double wavelength_nm,
                     std::uint64_t seed) {
  numerics::RandomStream rng(seed);
  return amplify(std::move(field), gain_db, nf_db, wavelength_nm, rng);
}

LinkOutput propagate_link(const SampledField& input, const LinkConfig& link, const SsfmConfig& cfg,
                          std::uint64_t seed) {
  link.validate();
  LinkOutput out{input, {}};
  out.provenance.wavelength_nm = link.signal_wavelength_nm;

  double launch_dbm = link.lop1_dbm;
  for (std::size_t i = 0; i < link.spans.size(); ++i) {
    const auto& span = link.spans[i];
    if (i == 0) {
      out.field = numerics::set_average_power(std::move(out.field), numerics::dbm_to_watts(launch_dbm));
    } else {
      const double in_dbm = numerics::watts_to_dbm(out.field.average_power_w());
      if (const auto* table = std::get_if<LopTable>(&link.lop2_rule)) {
        launch_dbm = resolve_lop2_dbm(*table, link.lop1_dbm);
      } else {
        launch_dbm = in_dbm + std::get<FixedGain>(link.lop2_rule).gain_db;
      }
      const double gain_db = launch_dbm - in_dbm;
      if (gain_db < 0.0) throw std::invalid_argument("propagate_link: resolved launch power requires negative gain");
      out.provenance.amp_gain_db.push_back(gain_db);
      if (link.ase_enabled) {
        numerics::RandomStream rng(seed, "inline_amp", i);
        out.field = amplify(std::move(out.field), gain_db, link.mid_amp.noise_figure_db(link.signal_wavelength_nm),
                            link.signal_wavelength_nm, rng);
      } else {
        scale_in_place(out.field, std::pow(10.0, gain_db / 20.0));
      }
    }
    out.provenance.spans.push_back(
        {span.length_km, span.alpha_db_per_km, numerics::dbm_to_watts(launch_dbm), launch_dbm});
    SsfmReport report;
    out.field = ssfm_propagate(std::move(out.field), span, cfg, &report);
    out.provenance.ssfm.push_back(report);
  }
  return out;
}

SampledField receiver_front_end(SampledField field, const LinkConfig& link, std::uint64_t seed) {
  const double target_w = numerics::dbm_to_watts(link.rx_power_dbm);
  if (link.rx_amp_ase && link.ase_enabled) {
    const double gain_db = std::max(0.0, link.rx_power_dbm - numerics::watts_to_dbm(field.average_power_w()));
    numerics::RandomStream rng(seed, "rx_amp", 0);
    field = amplify(std::move(field), gain_db, link.mid_amp.noise_figure_db(link.signal_wavelength_nm),
                    link.signal_wavelength_nm, rng);
  }
  return numerics::set_average_power(std::move(field), target_w);
}

}  // namespace obdbp::channel
