// Acceptance checks. One PASS/FAIL line per criterion; tolerances and
// runtime limits are fixed below. Exit status is nonzero if any selected
// criterion fails.
//
//   obdbp_acceptance                 all criteria
//   obdbp_acceptance --criterion 4   one criterion

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "obdbp/channel.hpp"
#include "obdbp/config.hpp"
#include "obdbp/dsp.hpp"
#include "obdbp/experiment.hpp"
#include "obdbp/fft.hpp"
#include "obdbp/metrics.hpp"
#include "obdbp/txrx.hpp"
#include "oracles.hpp"

namespace {

using namespace obdbp;
using numerics::SampledField;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* title;
  double limit_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Trace256 {
  txrx::TxConfig tx;
  txrx::SymbolFrame frame;
  SampledField field;
};

Trace256 qam256(std::size_t n_symbols, double power_w, std::uint64_t seed) {
  Trace256 t{{}, {}, SampledField(numerics::TimeGrid(64, 1.0))};
  t.tx.n_symbols = n_symbols;
  auto c = std::make_shared<const txrx::Constellation>(256);
  t.frame = txrx::map_bits(txrx::generate_bits(n_symbols * 16, seed), c);
  t.field = numerics::set_average_power(txrx::shape(t.frame, t.tx), power_w);
  return t;
}

// 1: forward SPM on a lossless, dispersionless span, inverted by WH DBP.
Outcome exact_spm_inversion() {
  const double gamma = 1.6, length = 75.5;
  const auto t = qam256(1 << 14, numerics::dbm_to_watts(9.0), 1);
  const auto forward = channel::apply_nonlinear(t.field, gamma, length, channel::NonlinearMode::kScalar);
  dsp::LinkKnowledge k;
  k.wavelength_nm = 1310.0;
  k.spans = {{length, 0.0, t.field.average_power_w()}};
  dsp::DbpConfig cfg;
  cfg.d_dbp_ps_nm_km = 0.0;
  cfg.gamma_dbp_per_w_km = gamma;
  cfg.nonlinear = channel::NonlinearMode::kScalar;
  const double err = numerics::relative_l2_error(dsp::dbp_single_step_wh(forward, k, cfg), t.field);
  const double before = numerics::relative_l2_error(forward, t.field);
  return {err <= 1e-9, "rel L2 error " + fmt("%.3e", err) + " <= 1e-9 (uncompensated " + fmt("%.3e", before) + ")"};
}

// 2: gamma = 0, noiseless two-span link, EDC at the true dispersion.
Outcome linear_inversion() {
  const auto t = qam256(1 << 14, 1e-3, 2);
  bool pass = true;
  std::string detail;
  for (double d : {-2.5, 0.01, 2.2}) {
    channel::LinkConfig link;
    link.signal_wavelength_nm = 1310.0;
    channel::FiberSpan s;
    s.gamma_per_w_km = 0.0;
    s.dispersion_ps_nm_km = d;
    link.spans = {s, s};
    link.lop2_rule = channel::FixedGain{0.283 * 75.5};
    link.ase_enabled = false;
    const auto out = channel::propagate_link(t.field, link, channel::SsfmConfig{}, 1);
    const auto k = dsp::LinkKnowledge::from_provenance(out.provenance);
    const auto rx = dsp::edc(channel::receiver_front_end(out.field, link, 1), k, d);
    const double evm = metrics::evm_db(t.frame, txrx::scalar_equalize(txrx::matched_filter(rx, t.tx), t.frame));
    pass = pass && evm <= -50.0;
    detail += "D=" + fmt("%g", d) + ": EVM " + fmt("%.1f", evm) + " dB; ";
  }
  return {pass, detail + "limit -50 dB"};
}

// 3: SSFM error against a fine reference, per step halving.
Outcome ssfm_order() {
  auto cfg = harness::load_preset("1310nm_50gbd");
  cfg.link.lop1_dbm = 6.0;
  cfg.link.ase_enabled = false;
  const auto t = qam256(1 << 13, numerics::dbm_to_watts(6.0), 3);
  auto run = [&](unsigned steps) {
    channel::SsfmConfig s;
    s.steps_per_span = steps;
    return channel::propagate_link(t.field, cfg.link, s, 1).field;
  };
  const auto ref = run(3200);
  const double e200 = numerics::relative_l2_error(run(200), ref);
  const double e400 = numerics::relative_l2_error(run(400), ref);
  const double e800 = numerics::relative_l2_error(run(800), ref);
  const double r1 = e200 / e400, r2 = e400 / e800;
  const bool pass = r1 >= 3.2 && r1 <= 4.8 && r2 >= 3.2 && r2 <= 4.8;
  return {pass, "errors " + fmt("%.3e", e200) + " / " + fmt("%.3e", e400) + " / " + fmt("%.3e", e800) +
                    "; ratios " + fmt("%.3f", r1) + ", " + fmt("%.3f", r2) + " in [3.2, 4.8]"};
}

// 4: DBP gain flat in kappa at the DBP-optimal LOP.
Outcome kappa_flatness() {
  auto cfg = harness::load_preset("1310nm_50gbd");
  cfg.traces = 50;
  const std::vector<double> kappas{0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
  const auto r = harness::sweep_kappa(cfg, kappas);
  const double edc = r.records.back().snr_db;
  double lo = 1e9, hi = -1e9;
  for (std::size_t i = 0; i < kappas.size(); ++i) {
    lo = std::min(lo, r.records[i].snr_db - edc);
    hi = std::max(hi, r.records[i].snr_db - edc);
  }
  // With no dispersion to split, kappa must not matter at all.
  auto flat = cfg;
  flat.traces = 3;
  flat.dbp.d_dbp_ps_nm_km = 0.0;
  const auto z = harness::sweep_kappa(flat, kappas, r.records.front().coords.lop1_dbm);
  double spread0 = 0.0;
  for (std::size_t i = 1; i < kappas.size(); ++i) spread0 = std::max(spread0, std::abs(z.records[i].snr_db - z.records[0].snr_db));
  const bool pass = hi - lo <= 0.1 && spread0 <= 1e-10;
  return {pass, "LOP1 " + fmt("%.1f", r.records.front().coords.lop1_dbm) + " dBm; gain " + fmt("%.3f", lo) + ".." +
                    fmt("%.3f", hi) + " dB, spread " + fmt("%.3f", hi - lo) + " <= 0.1; d=0 spread " +
                    fmt("%.1e", spread0) + " <= 1e-10"};
}

// 5: shape of the SNR versus launch power curves.
Outcome fig2_shape() {
  auto cfg = harness::load_preset("1310nm_50gbd");
  cfg.traces = 50;
  const auto r = harness::sweep_lop(cfg, cfg.lop_sweep_dbm);
  const double edc_opt = harness::optimal_lop(r, "edc");
  const double dbp_opt = harness::optimal_lop(r, "dbp");
  const bool interior = edc_opt > cfg.lop_sweep_dbm.front() && edc_opt < cfg.lop_sweep_dbm.back();

  // gamma_dbp optimised at the EDC-optimal launch power.
  auto at_opt = cfg;
  at_opt.link.lop1_dbm = edc_opt;
  std::vector<double> gammas;
  for (int i = 0; i <= 16; ++i) gammas.push_back(0.2 * i);
  const auto g = harness::sweep_dbp_grid(at_opt, {cfg.dbp.d_dbp_ps_nm_km}, gammas);
  double best = -1e9, edc = 0.0, best_gamma = 0.0;
  for (const auto& rec : g.records) {
    if (rec.coords.compensation.rfind("edc", 0) == 0) {
      edc = rec.snr_db;
    } else if (rec.snr_db > best) {
      best = rec.snr_db;
      best_gamma = rec.coords.gamma_dbp_per_w_km;
    }
  }
  const double gain = best - edc;
  const bool pass = interior && gain >= 0.8 && dbp_opt > edc_opt;
  return {pass, std::string("(a) EDC optimum ") + fmt("%.0f", edc_opt) + " dBm " + (interior ? "interior" : "at edge") +
                    "; (b) gain at EDC optimum " + fmt("%.2f", gain) + " dB (gamma_dbp " + fmt("%.1f", best_gamma) +
                    ") >= 0.8; (c) DBP optimum " + fmt("%.0f", dbp_opt) + " > " + fmt("%.0f", edc_opt)};
}

// 6: best DBP dispersion at the two dispersive wavelengths.
Outcome dispersion_argmax() {
  bool pass = true;
  std::string detail;
  for (auto [preset, truth] : {std::pair{"1290nm_50gbd", -2.5}, std::pair{"1330nm_50gbd", 2.2}}) {
    auto cfg = harness::load_preset(preset);
    cfg.traces = 20;
    cfg.link.lop1_dbm = 3.0;
    std::vector<double> d;
    for (int i = -4; i <= 4; ++i) d.push_back(truth + 0.5 * i);
    const auto r = harness::sweep_dbp_grid(cfg, d, {0.0, 0.8, 1.6, 2.4});
    double best_d = NAN;
    for (const auto& line : r.summary) {
      if (line.rfind("best d_dbp_ps_nm_km=", 0) == 0) best_d = std::stod(line.substr(20));
    }
    const bool ok = std::abs(best_d - truth) <= 0.5 + 1e-12;
    pass = pass && ok;
    detail += std::string(preset) + ": best d " + fmt("%g", best_d) + " (true " + fmt("%g", truth) + "); ";
  }
  return {pass, detail + "grid step 0.5"};
}

// 7: GMI against numerical integration.
Outcome gmi_oracle() {
  double worst = 0.0;
  for (unsigned order : {4u, 16u}) {
    auto c = std::make_shared<const txrx::Constellation>(order);
    for (double snr : {0.0, 5.0, 10.0, 15.0, 20.0}) {
      const std::size_t n = 1 << 18;
      const auto bits = txrx::generate_bits(n * 2 * c->bits_per_symbol(), 70 + order);
      const auto tx = txrx::map_bits(bits, c);
      auto rx = tx;
      numerics::RandomStream rng(static_cast<std::uint64_t>(snr * 10) + order);
      const double var = std::pow(10.0, -snr / 10.0);
      for (auto& v : rx.x) v += std::sqrt(var) * rng.complex_normal();
      for (auto& v : rx.y) v += std::sqrt(var) * rng.complex_normal();
      const double est = metrics::gmi_estimate(bits, rx, *c).bits;
      const double ref = 2.0 * oracle::gmi_awgn(c->points(), var);
      worst = std::max(worst, std::abs(est - ref));
    }
  }
  auto c256 = std::make_shared<const txrx::Constellation>(256);
  const auto bits = txrx::generate_bits(4096 * 16, 9);
  const auto frame = txrx::map_bits(bits, c256);
  const double noiseless = metrics::gmi_estimate(bits, frame, *c256).bits;
  const bool pass = worst <= 0.02 && noiseless == 16.0;
  return {pass, "max |GMI - oracle| " + fmt("%.4f", worst) + " <= 0.02 bits; noiseless 256QAM " + fmt("%.6f", noiseless)};
}

// 8: SNR estimator and back-to-back calibration.
Outcome snr_calibration() {
  auto c = std::make_shared<const txrx::Constellation>(256);
  const std::size_t n = 1 << 16;
  const auto frame = txrx::map_bits(txrx::generate_bits(n * 16, 8), c);
  auto rx = frame;
  numerics::RandomStream rng(80);
  const double s = std::sqrt(std::pow(10.0, -2.0));
  for (auto& v : rx.x) v += s * rng.complex_normal();
  for (auto& v : rx.y) v += s * rng.complex_normal();
  const double awgn = metrics::snr_estimate(frame, rx).db;
  bool pass = std::abs(awgn - 20.0) <= 0.05;
  std::string detail = "AWGN 20 dB -> " + fmt("%.3f", awgn) + " (+-0.05); B2B";

  txrx::TxConfig tx;
  tx.n_symbols = n;
  const auto clean = txrx::shape(frame, tx);
  double worst = 0.0;
  std::uint64_t seed = 100;
  for (double target : {22.98, 19.61, 23.49, 19.89, 23.5, 20.34}) {
    // Same split between the two noise shares as the simulation harness.
    numerics::RandomStream tx_rng(seed++), rx_rng(seed++);
    auto f = txrx::load_transceiver_noise(clean, target, tx.samples_per_symbol, tx_rng, 0.5);
    f = txrx::load_transceiver_noise(f, target, tx.samples_per_symbol, rx_rng, 0.5);
    const double got =
        metrics::snr_estimate(frame, txrx::scalar_equalize(txrx::matched_filter(f, tx), frame)).db;
    worst = std::max(worst, std::abs(got - target));
    detail += " " + fmt("%.2f", got);
  }
  pass = pass && worst <= 0.1;
  return {pass, detail + "; max deviation " + fmt("%.3f", worst) + " <= 0.1"};
}

// 9: transform pairs used by single-step WH DBP.
Outcome fft_count() {
  const auto t = qam256(1 << 12, 1e-3, 9);
  dsp::LinkKnowledge k;
  k.spans = {{75.5, 0.283, 1e-3}, {75.5, 0.283, 1e-3}};
  bool pass = true;
  std::string detail;
  for (double kappa : {0.0, 0.2, 0.5, 0.8, 1.0}) {
    dsp::DbpConfig cfg;
    cfg.kappa = kappa;
    numerics::ScopedTransformCounter counter;
    (void)dsp::dbp_single_step_wh(t.field, k, cfg);
    const auto d = counter.delta();
    const std::uint64_t want = (kappa == 0.0 || kappa == 1.0) ? 1 : 2;
    pass = pass && d.forward == want && d.inverse == want;
    detail += "k=" + fmt("%.1f", kappa) + ":" + std::to_string(d.forward) + "/" + std::to_string(d.inverse) + " ";
  }
  return {pass, detail + "(forward/inverse)"};
}

// 10: byte-identical reruns and serial/parallel equivalence.
Outcome determinism() {
  auto cfg = harness::load_preset("1310nm_50gbd");
  cfg.tx.n_symbols = 8192;
  cfg.traces = 4;
  const auto dir = std::filesystem::temp_directory_path() / "obdbp_acceptance_determinism";
  std::filesystem::create_directories(dir);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  auto all_sweeps = [&](unsigned threads, const std::string& tag) {
    auto c = cfg;
    c.threads = threads;
    harness::emit_csv(harness::sweep_lop(c, {-3.0, 3.0, 6.0}), dir / (tag + "_lop.csv"));
    harness::emit_csv(harness::sweep_kappa(c, {0.0, 0.5, 1.0}, 3.0), dir / (tag + "_kappa.csv"));
    harness::emit_csv(harness::sweep_dbp_grid(c, {0.0, 0.01}, {0.0, 1.6}), dir / (tag + "_grid.csv"));
  };
  all_sweeps(1, "a");
  all_sweeps(1, "b");
  all_sweeps(4, "p");
  bool rerun = true, parallel = true;
  for (const char* s : {"_lop.csv", "_kappa.csv", "_grid.csv"}) {
    const auto a = slurp(dir / (std::string("a") + s));
    rerun = rerun && !a.empty() && a == slurp(dir / (std::string("b") + s));
    parallel = parallel && a == slurp(dir / (std::string("p") + s));
  }
  std::filesystem::remove_all(dir);
  return {rerun && parallel, std::string("rerun ") + (rerun ? "identical" : "DIFFERS") + "; threads 1 vs 4 " +
                                 (parallel ? "identical" : "DIFFER") + " (lop, kappa, dbp grid CSV)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"obdbp acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> criteria{
      {1, "exact SPM inversion", 5.0, exact_spm_inversion},
      {2, "linear inversion", 10.0, linear_inversion},
      {3, "SSFM order", 120.0, ssfm_order},
      {4, "kappa flatness", 600.0, kappa_flatness},
      {5, "SNR vs launch power shape", 900.0, fig2_shape},
      {6, "DBP dispersion argmax", 900.0, dispersion_argmax},
      {7, "GMI oracle", 120.0, gmi_oracle},
      {8, "SNR calibration", 120.0, snr_calibration},
      {9, "FFT count", 1.0, fft_count},
      {10, "determinism", 300.0, determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s criterion %d (%s): %s; runtime %.2f s < %.0f s%s\n", pass ? "PASS" : "FAIL", c.id, c.title,
                o.detail.c_str(), secs, c.limit_s, in_time ? "" : " EXCEEDED");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
