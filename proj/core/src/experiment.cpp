#include "obdbp/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

#include "obdbp/parallel.hpp"

namespace obdbp::harness {
namespace {

const char* label(Compensation c) { return c == Compensation::kEdc ? "edc" : "dbp"; }

RunMeta meta_for(const ExperimentConfig& cfg) { return {config_hash(cfg), cfg.seed, kToolVersion}; }

metrics::Coordinates coords_for(const ExperimentConfig& cfg, double lop1, double lop2, double kappa,
                                std::string compensation, double d, double gamma) {
  metrics::Coordinates c;
  c.lop1_dbm = lop1;
  c.lop2_dbm = lop2;
  c.kappa = kappa;
  c.wavelength_nm = cfg.wavelength_nm();
  c.symbol_rate_bd = cfg.tx.symbol_rate_bd;
  c.compensation = std::move(compensation);
  c.d_dbp_ps_nm_km = d;
  c.gamma_dbp_per_w_km = gamma;
  return c;
}

metrics::MetricsRecord record_of(const Evaluation& e, metrics::Coordinates coords) {
  metrics::MetricsRecord r;
  r.snr_db = e.snr_db;
  r.gmi_bits = e.gmi_bits;
  r.air_bps = e.air_bps;
  r.coords = std::move(coords);
  r.n_traces = 1;
  return r;
}

// Per-trace records must be merged in trace order so that parallel and
// serial runs agree bit for bit; aggregate() also sorts before summing.
metrics::MetricsRecord merge(const std::vector<metrics::MetricsRecord>& per_trace) {
  return metrics::aggregate(per_trace);
}

double lop2_for(const ExperimentConfig& cfg, double lop1) {
  if (const auto* t = std::get_if<channel::LopTable>(&cfg.link.lop2_rule)) return channel::resolve_lop2_dbm(*t, lop1);
  // Fixed-gain links have no nominal LOP2; -inf keeps coordinates comparable
  // and is written as an empty cell.
  return -std::numeric_limits<double>::infinity();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

TraceSimulation simulate_trace(const ExperimentConfig& cfg, std::size_t trace_index) {
  auto constellation = std::make_shared<const txrx::Constellation>(cfg.qam_order);
  const std::size_t n_bits = cfg.tx.n_symbols * 2 * constellation->bits_per_symbol();
  auto bits = txrx::generate_bits(n_bits, numerics::derive_stream_seed(cfg.seed, "bits", trace_index));
  auto tx = txrx::map_bits(bits, constellation);

  auto field = txrx::shape(tx, cfg.tx);
  if (std::isfinite(cfg.b2b_snr_db) && cfg.tx_noise_fraction > 0.0) {
    numerics::RandomStream rng(cfg.seed, "tx_noise", trace_index);
    field = txrx::load_transceiver_noise(std::move(field), cfg.b2b_snr_db, cfg.tx.samples_per_symbol, rng,
                                         cfg.tx_noise_fraction);
  }
  auto out = channel::propagate_link(field, cfg.link, cfg.ssfm,
                                     numerics::derive_stream_seed(cfg.seed, "link", trace_index));
  auto knowledge = dsp::LinkKnowledge::from_provenance(out.provenance);
  const double lop2 = out.provenance.spans.size() > 1 ? out.provenance.spans[1].launch_power_dbm
                                                      : std::numeric_limits<double>::quiet_NaN();
  field = channel::receiver_front_end(std::move(out.field), cfg.link,
                                      numerics::derive_stream_seed(cfg.seed, "rx_amp", trace_index));
  if (std::isfinite(cfg.b2b_snr_db) && cfg.tx_noise_fraction < 1.0) {
    numerics::RandomStream rng(cfg.seed, "rx_noise", trace_index);
    field = txrx::load_transceiver_noise(std::move(field), cfg.b2b_snr_db, cfg.tx.samples_per_symbol, rng,
                                         1.0 - cfg.tx_noise_fraction);
  }
  return {std::move(bits), std::move(tx), std::move(field), std::move(knowledge), lop2};
}

Evaluation evaluate(const TraceSimulation& sim, const ExperimentConfig& cfg, Compensation compensation,
                    const dsp::DbpConfig& dbp) {
  auto processed = compensation == Compensation::kEdc
                       ? dsp::edc(sim.received, sim.knowledge, cfg.fibre_dispersion_ps_nm_km())
                       : dsp::digital_backpropagation(sim.received, sim.knowledge, dbp);
  const auto rx = txrx::scalar_equalize(txrx::matched_filter(processed, cfg.tx), sim.tx);
  Evaluation e;
  e.snr_db = metrics::snr_estimate(sim.tx, rx).db;
  e.gmi_bits = metrics::gmi_estimate(sim.bits, rx, *sim.tx.constellation).bits;
  e.air_bps = metrics::air(e.gmi_bits, cfg.tx.symbol_rate_bd);
  return e;
}

metrics::MetricsRecord run_single(const ExperimentConfig& cfg, std::size_t trace_index) {
  cfg.validate();
  const auto sim = simulate_trace(cfg, trace_index);
  const auto e = evaluate(sim, cfg, cfg.compensation, cfg.dbp);
  const bool dbp = cfg.compensation == Compensation::kDbp;
  return record_of(e, coords_for(cfg, cfg.link.lop1_dbm, lop2_for(cfg, cfg.link.lop1_dbm), dbp ? cfg.dbp.kappa : 0.0,
                                 label(cfg.compensation), dbp ? cfg.dbp.d_dbp_ps_nm_km : cfg.fibre_dispersion_ps_nm_km(),
                                 dbp ? cfg.dbp.gamma_dbp_per_w_km : 0.0));
}

SweepResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<metrics::MetricsRecord> per_trace(cfg.traces);
  parallel_for(cfg.traces, cfg.threads, [&](std::size_t t) { per_trace[t] = run_single(cfg, t); });
  SweepResult result{"single", {merge(per_trace)}, meta_for(cfg), {}};
  return result;
}

SweepResult sweep_lop(const ExperimentConfig& cfg, const std::vector<double>& powers_dbm) {
  cfg.validate();
  if (powers_dbm.empty()) throw std::invalid_argument("sweep_lop: empty power list");
  for (double p : powers_dbm) (void)lop2_for(cfg, p);

  const std::size_t np = powers_dbm.size();
  const std::size_t nt = cfg.traces;
  std::vector<metrics::MetricsRecord> edc(np * nt), dbp(np * nt);
  parallel_for(np * nt, cfg.threads, [&](std::size_t job) {
    const std::size_t pi = job / nt;
    const std::size_t t = job % nt;
    ExperimentConfig local = cfg;
    local.link.lop1_dbm = powers_dbm[pi];
    const auto sim = simulate_trace(local, t);
    const double lop2 = lop2_for(local, powers_dbm[pi]);
    edc[job] = record_of(evaluate(sim, local, Compensation::kEdc, local.dbp),
                         coords_for(local, powers_dbm[pi], lop2, 0.0, "edc",
                                    local.fibre_dispersion_ps_nm_km(), 0.0));
    dbp[job] = record_of(evaluate(sim, local, Compensation::kDbp, local.dbp),
                         coords_for(local, powers_dbm[pi], lop2, local.dbp.kappa, "dbp",
                                    local.dbp.d_dbp_ps_nm_km, local.dbp.gamma_dbp_per_w_km));
  });

  SweepResult result{"lop1_dbm", {}, meta_for(cfg), {}};
  for (const auto* set : {&edc, &dbp}) {
    for (std::size_t pi = 0; pi < np; ++pi) {
      std::vector<metrics::MetricsRecord> slice(set->begin() + static_cast<std::ptrdiff_t>(pi * nt),
                                                set->begin() + static_cast<std::ptrdiff_t>((pi + 1) * nt));
      result.records.push_back(merge(slice));
    }
  }
  const double best_edc = optimal_lop(result, "edc");
  const double best_dbp = optimal_lop(result, "dbp");
  result.summary.push_back("optimal_lop1_dbm edc=" + fmt("%.2f", best_edc) + " dbp=" + fmt("%.2f", best_dbp));
  for (std::size_t pi = 0; pi < np; ++pi) {
    if (powers_dbm[pi] == best_edc) {
      result.summary.push_back("dbp_gain_at_edc_optimum_db=" +
                               fmt("%.4f", result.records[np + pi].snr_db - result.records[pi].snr_db));
    }
  }
  return result;
}

double optimal_lop(const SweepResult& lop_sweep, const std::string& compensation) {
  const metrics::MetricsRecord* best = nullptr;
  for (const auto& r : lop_sweep.records) {
    if (r.coords.compensation != compensation) continue;
    if (!best || r.snr_db > best->snr_db) best = &r;
  }
  if (!best) throw std::invalid_argument("optimal_lop: no records for '" + compensation + "'");
  return best->coords.lop1_dbm;
}

SweepResult sweep_kappa(const ExperimentConfig& cfg, const std::vector<double>& kappas,
                        std::optional<double> lop1_dbm) {
  cfg.validate();
  if (kappas.empty()) throw std::invalid_argument("sweep_kappa: empty kappa list");
  for (double k : kappas) {
    if (!(k >= 0.0 && k <= 1.0)) throw std::invalid_argument("sweep_kappa: kappa outside [0, 1]");
  }

  SweepResult result{"kappa", {}, meta_for(cfg), {}};
  if (!lop1_dbm) lop1_dbm = cfg.kappa_sweep_lop1_dbm;
  if (!lop1_dbm) {
    lop1_dbm = optimal_lop(sweep_lop(cfg, cfg.lop_sweep_dbm), "dbp");
    result.summary.push_back("lop1_dbm=" + fmt("%.2f", *lop1_dbm) + " (DBP-optimal over lop_sweep_dbm)");
  } else {
    result.summary.push_back("lop1_dbm=" + fmt("%.2f", *lop1_dbm));
  }

  ExperimentConfig local = cfg;
  local.link.lop1_dbm = *lop1_dbm;
  local.validate();
  const std::size_t nk = kappas.size();
  const std::size_t nt = cfg.traces;
  // Column nk holds the EDC reference.
  std::vector<metrics::MetricsRecord> rec((nk + 1) * nt);
  parallel_for(nt, cfg.threads, [&](std::size_t t) {
    const auto sim = simulate_trace(local, t);
    for (std::size_t k = 0; k < nk; ++k) {
      dsp::DbpConfig d = local.dbp;
      d.kappa = kappas[k];
      rec[k * nt + t] = record_of(evaluate(sim, local, Compensation::kDbp, d),
                                  coords_for(local, *lop1_dbm, lop2_for(local, *lop1_dbm), kappas[k], "dbp", d.d_dbp_ps_nm_km,
                                             d.gamma_dbp_per_w_km));
    }
    rec[nk * nt + t] = record_of(evaluate(sim, local, Compensation::kEdc, local.dbp),
                                 coords_for(local, *lop1_dbm, lop2_for(local, *lop1_dbm), 0.0, "edc",
                                            local.fibre_dispersion_ps_nm_km(), 0.0));
  });

  for (std::size_t k = 0; k <= nk; ++k) {
    std::vector<metrics::MetricsRecord> slice(rec.begin() + static_cast<std::ptrdiff_t>(k * nt),
                                              rec.begin() + static_cast<std::ptrdiff_t>((k + 1) * nt));
    result.records.push_back(merge(slice));
  }
  const double edc_snr = result.records.back().snr_db;
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t k = 0; k < nk; ++k) {
    lo = std::min(lo, result.records[k].snr_db - edc_snr);
    hi = std::max(hi, result.records[k].snr_db - edc_snr);
  }
  result.summary.push_back("dbp_gain_db min=" + fmt("%.4f", lo) + " max=" + fmt("%.4f", hi));
  return result;
}

SweepResult sweep_dbp_grid(const ExperimentConfig& cfg, const std::vector<double>& d_values,
                           const std::vector<double>& gamma_values) {
  cfg.validate();
  if (d_values.empty() || gamma_values.empty()) throw std::invalid_argument("sweep_dbp_grid: empty grid");

  std::vector<std::optional<TraceSimulation>> sims(cfg.traces);
  parallel_for(cfg.traces, cfg.threads, [&](std::size_t t) { sims[t] = simulate_trace(cfg, t); });
  std::vector<dsp::DbpTrace> traces;
  traces.reserve(sims.size());
  for (auto& s : sims) traces.push_back({std::move(s->received), s->tx});

  dsp::DbpSweepOptions options;
  options.threads = cfg.threads;
  const auto sweep = dsp::dbp_param_sweep(traces, sims.front()->knowledge, cfg.tx, cfg.dbp, d_values, gamma_values,
                                          options);

  SweepResult result{"dbp_grid", {}, meta_for(cfg), {}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double lop2 = lop2_for(cfg, cfg.link.lop1_dbm);
  for (const auto& p : sweep.map) {
    char name[96];
    std::snprintf(name, sizeof name, "dbp[d=%g;gamma=%g]", p.d_dbp_ps_nm_km, p.gamma_dbp_per_w_km);
    metrics::MetricsRecord r;
    r.snr_db = p.snr_db;
    r.gmi_bits = nan;
    r.air_bps = nan;
    r.coords = coords_for(cfg, cfg.link.lop1_dbm, lop2, cfg.dbp.kappa, name, p.d_dbp_ps_nm_km, p.gamma_dbp_per_w_km);
    r.n_traces = cfg.traces;
    result.records.push_back(r);
  }
  for (const auto& p : sweep.map) {
    if (p.gamma_dbp_per_w_km != gamma_values.front()) continue;
    char name[64];
    std::snprintf(name, sizeof name, "edc[d=%g]", p.d_dbp_ps_nm_km);
    metrics::MetricsRecord r;
    r.snr_db = p.snr_db - p.gain_db;
    r.gmi_bits = nan;
    r.air_bps = nan;
    r.coords = coords_for(cfg, cfg.link.lop1_dbm, lop2, 0.0, name, p.d_dbp_ps_nm_km, 0.0);
    r.n_traces = cfg.traces;
    result.records.push_back(r);
  }
  result.summary.push_back("best d_dbp_ps_nm_km=" + fmt("%g", sweep.best_d_ps_nm_km) +
                           " gamma_dbp_per_w_km=" + fmt("%g", sweep.best_gamma_per_w_km) +
                           " snr_db=" + fmt("%.4f", sweep.best_snr_db) +
                           " gain_db=" + fmt("%.4f", sweep.best_snr_db - sweep.edc_snr_db));
  return result;
}

namespace {

std::string cell(const char* f, double v) {
  if (!std::isfinite(v)) return "";
  return fmt(f, v);
}

std::string header_lines(const SweepResult& result) {
  std::string out;
  out += "# tool_version=" + result.meta.tool_version + "\n";
  out += "# config_hash=" + result.meta.config_hash + "\n";
  out += "# seed=" + std::to_string(result.meta.seed) + "\n";
  out += "# axis=" + result.axis + "\n";
  for (const auto& s : result.summary) out += "# " + s + "\n";
  return out;
}

std::string row(const metrics::MetricsRecord& r, std::uint64_t seed) {
  const auto& c = r.coords;
  std::string line;
  line += cell("%.4f", c.lop1_dbm) + ",";
  line += cell("%.4f", c.lop2_dbm) + ",";
  line += cell("%.4f", c.wavelength_nm) + ",";
  line += cell("%.6g", c.symbol_rate_bd) + ",";
  line += cell("%.4f", c.kappa) + ",";
  line += c.compensation + ",";
  line += cell("%.6f", r.snr_db) + ",";
  line += cell("%.6f", r.gmi_bits) + ",";
  line += cell("%.6f", r.air_bps / 1e9) + ",";
  line += std::to_string(r.n_traces) + ",";
  line += std::to_string(seed) + "\n";
  return line;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

}  // namespace

std::string format_csv(const SweepResult& result) {
  if (result.records.empty()) throw std::invalid_argument("emit_csv: empty result");
  std::string out = header_lines(result);
  out += "lop1_dbm,lop2_dbm,wavelength_nm,symbol_rate_bd,kappa,compensation,snr_db,gmi_bits,air_gbps,n_traces,seed\n";
  for (const auto& r : result.records) out += row(r, result.meta.seed);
  return out;
}

std::string format_plot_data(const SweepResult& result) {
  if (result.records.empty()) throw std::invalid_argument("emit_plot_data: empty result");
  // One block per curve (compensation label), blocks separated by two blank
  // lines so gnuplot can address them with `index`.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const metrics::MetricsRecord*>> curves;
  for (const auto& r : result.records) {
    auto [it, inserted] = curves.try_emplace(r.coords.compensation);
    if (inserted) order.push_back(r.coords.compensation);
    it->second.push_back(&r);
  }
  const bool kappa_axis = result.axis == "kappa";
  const bool grid_axis = result.axis == "dbp_grid";
  std::string out = header_lines(result);
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) out += "\n\n";
    out += "# curve " + order[i] + "\n";
    if (grid_axis) {
      out += "# d_dbp_ps_nm_km gamma_dbp_per_w_km snr_db\n";
    } else {
      out += std::string("# ") + (kappa_axis ? "kappa" : "lop1_dbm") + " snr_db gmi_bits air_gbps\n";
    }
    for (const auto* r : curves[order[i]]) {
      if (grid_axis) {
        out += fmt("%.4f", r->coords.d_dbp_ps_nm_km) + " " + fmt("%.4f", r->coords.gamma_dbp_per_w_km) + " " +
               fmt("%.6f", r->snr_db) + "\n";
      } else {
        const double x = kappa_axis ? r->coords.kappa : r->coords.lop1_dbm;
        out += fmt("%.4f", x) + " " + fmt("%.6f", r->snr_db) + " " + fmt("%.6f", r->gmi_bits) + " " +
               fmt("%.6f", r->air_bps / 1e9) + "\n";
      }
    }
  }
  return out;
}

void emit_csv(const SweepResult& result, const std::filesystem::path& path) { write_file(path, format_csv(result)); }

void emit_plot_data(const SweepResult& result, const std::filesystem::path& path) {
  write_file(path, format_plot_data(result));
}

}  // namespace obdbp::harness
