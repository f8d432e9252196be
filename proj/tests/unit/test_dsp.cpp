#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "obdbp/channel.hpp"
#include "obdbp/dsp.hpp"
#include "obdbp/fft.hpp"
#include "obdbp/metrics.hpp"
#include "obdbp/txrx.hpp"

using namespace obdbp;
using dsp::DbpConfig;
using dsp::DbpMode;
using dsp::LinkKnowledge;
using numerics::SampledField;

namespace {

struct Fixture {
  txrx::TxConfig tx;
  txrx::SymbolFrame frame;
  SampledField launched;

  explicit Fixture(double power_dbm, std::size_t n_symbols = 4096, std::uint64_t seed = 1)
      : launched(numerics::TimeGrid(64, 1.0)) {
    tx.n_symbols = n_symbols;
    auto c = std::make_shared<const txrx::Constellation>(16);
    frame = txrx::map_bits(txrx::generate_bits(n_symbols * 8, seed), c);
    launched = numerics::set_average_power(txrx::shape(frame, tx), numerics::dbm_to_watts(power_dbm));
  }

  double snr(const SampledField& f) const {
    return metrics::snr_estimate(frame, txrx::scalar_equalize(txrx::matched_filter(f, tx), frame)).db;
  }
};

LinkKnowledge one_span(double launch_w, double length_km = 75.5) {
  LinkKnowledge k;
  k.wavelength_nm = 1330.0;
  k.spans = {{length_km, 0.283, launch_w}};
  return k;
}

}  // namespace

TEST_CASE("gamma_dbp = 0 reduces DBP to EDC for every kappa") {
  const Fixture fx(3.0);
  LinkKnowledge k = one_span(2e-3);
  k.spans.push_back(k.spans.front());
  const auto ref = dsp::edc(fx.launched, k, 2.2);
  for (double kappa : {0.0, 0.3, 0.5, 1.0}) {
    DbpConfig cfg;
    cfg.kappa = kappa;
    cfg.d_dbp_ps_nm_km = 2.2;
    cfg.gamma_dbp_per_w_km = 0.0;
    CHECK(numerics::relative_l2_error(dsp::dbp_single_step_wh(fx.launched, k, cfg), ref) < 1e-10);
    cfg.mode = DbpMode::kMultiStep;
    cfg.steps_per_span = 3;
    CHECK(numerics::relative_l2_error(dsp::dbp_multi_step(fx.launched, k, cfg), ref) < 1e-10);
  }
}

TEST_CASE("kappa has no effect without dispersion") {
  const Fixture fx(6.0);
  const auto k = one_span(4e-3);
  DbpConfig cfg;
  cfg.d_dbp_ps_nm_km = 0.0;
  cfg.kappa = 0.0;
  const auto a = dsp::dbp_single_step_wh(fx.launched, k, cfg);
  for (double kappa : {0.25, 0.5, 1.0}) {
    cfg.kappa = kappa;
    CHECK(numerics::relative_l2_error(dsp::dbp_single_step_wh(fx.launched, k, cfg), a) < 1e-12);
  }
}

TEST_CASE("single-step WH inverts a lossless lumped channel") {
  // Forward: NL(gamma L) then D(L) on one lossless span. Backward with
  // kappa = 1 is exactly D(-L) then NL(-gamma L).
  const Fixture fx(6.0);
  channel::FiberSpan span;
  span.alpha_db_per_km = 0.0;
  span.length_km = 50.0;
  span.dispersion_ps_nm_km = 2.2;
  span.ref_wavelength_nm = 1330.0;
  const double p = fx.launched.average_power_w();
  auto f = channel::apply_nonlinear(fx.launched, 1.6, 50.0, channel::NonlinearMode::kManakov);
  f = channel::apply_dispersion(f, channel::dispersion_to_beta2(2.2, 1330.0), 50.0);
  LinkKnowledge k;
  k.wavelength_nm = 1330.0;
  k.spans = {{50.0, 0.0, p}};
  DbpConfig cfg;
  cfg.kappa = 1.0;
  cfg.d_dbp_ps_nm_km = 2.2;
  const auto back = dsp::dbp_single_step_wh(f, k, cfg);
  CHECK(numerics::relative_l2_error(back, fx.launched) < 1e-9);
  // The wrong order leaves a residual.
  cfg.kappa = 0.0;
  CHECK(numerics::relative_l2_error(dsp::dbp_single_step_wh(f, k, cfg), fx.launched) > 1e-3);
}

TEST_CASE("single-step WH uses one transform pair at the kappa edges and two inside") {
  const Fixture fx(0.0);
  const auto k = one_span(1e-3);
  DbpConfig cfg;
  for (auto [kappa, pairs] : {std::pair{0.0, 1u}, std::pair{1.0, 1u}, std::pair{0.5, 2u}}) {
    cfg.kappa = kappa;
    numerics::ScopedTransformCounter c;
    (void)dsp::dbp_single_step_wh(fx.launched, k, cfg);
    CHECK(c.delta().forward == pairs);
    CHECK(c.delta().inverse == pairs);
  }
  numerics::ScopedTransformCounter c;
  (void)dsp::edc(fx.launched, k, 0.01);
  CHECK(c.delta().pairs() == 1);
}

TEST_CASE("multi-step with one step per span matches single-step WH on one span") {
  const Fixture fx(6.0);
  const auto k = one_span(4e-3);
  DbpConfig ws;
  ws.kappa = 0.5;
  ws.d_dbp_ps_nm_km = 2.2;
  DbpConfig ms = ws;
  ms.mode = DbpMode::kMultiStep;
  ms.steps_per_span = 1;
  const auto a = dsp::dbp_single_step_wh(fx.launched, k, ws);
  const auto b = dsp::dbp_multi_step(fx.launched, k, ms);
  CHECK(numerics::relative_l2_error(b, a) < 1e-12);
}

TEST_CASE("multi-step DBP inverts a finely resolved forward link") {
  const Fixture fx(9.0, 2048);
  channel::LinkConfig link;
  channel::FiberSpan span;
  span.dispersion_ps_nm_km = 2.2;
  span.ref_wavelength_nm = 1330.0;
  link.signal_wavelength_nm = 1330.0;
  link.spans = {span, span};
  link.lop1_dbm = 9.0;
  link.lop2_rule = channel::FixedGain{0.283 * 75.5};
  link.ase_enabled = false;
  channel::SsfmConfig fine;
  fine.steps_per_span = 2000;
  const auto out = channel::propagate_link(fx.launched, link, fine, 1);
  const auto k = LinkKnowledge::from_provenance(out.provenance);

  DbpConfig cfg;
  cfg.mode = DbpMode::kMultiStep;
  cfg.d_dbp_ps_nm_km = 2.2;
  double prev = 1e9;
  for (unsigned steps : {1u, 10u, 100u, 2000u}) {
    cfg.steps_per_span = steps;
    const auto back = dsp::dbp_multi_step(out.field, k, cfg);
    const auto rx = txrx::scalar_equalize(txrx::matched_filter(back, fx.tx), fx.frame);
    const double evm = metrics::evm_db(fx.frame, rx);
    CHECK(evm < prev);
    prev = evm;
  }
  CHECK(prev < -60.0);
  // EDC alone is far worse at this power.
  CHECK(fx.snr(dsp::edc(out.field, k, 2.2)) < 40.0);
}

TEST_CASE("invalid DBP configurations are rejected") {
  const Fixture fx(0.0);
  const auto k = one_span(1e-3);
  DbpConfig cfg;
  cfg.kappa = 1.5;
  CHECK_THROWS_AS(dsp::digital_backpropagation(fx.launched, k, cfg), std::invalid_argument);
  cfg = DbpConfig{};
  cfg.gamma_dbp_per_w_km = -1.0;
  CHECK_THROWS_AS(dsp::digital_backpropagation(fx.launched, k, cfg), std::invalid_argument);
  cfg = DbpConfig{};
  cfg.mode = DbpMode::kMultiStep;
  cfg.steps_per_span = 0;
  CHECK_THROWS_AS(dsp::digital_backpropagation(fx.launched, k, cfg), std::invalid_argument);
  cfg = DbpConfig{};
  CHECK_THROWS_AS(dsp::dbp_multi_step(fx.launched, k, cfg), std::invalid_argument);
  SampledField zero(fx.launched.grid);
  CHECK_THROWS_AS(dsp::dbp_single_step_wh(zero, k, DbpConfig{}), std::invalid_argument);
}

TEST_CASE("parameter sweep on a linear channel prefers gamma = 0 and the true dispersion") {
  const Fixture fx(0.0, 2048);
  LinkKnowledge k = one_span(1e-3);
  k.spans.push_back(k.spans.front());
  auto received = channel::apply_dispersion(fx.launched, channel::dispersion_to_beta2(2.2, 1330.0), 151.0);
  numerics::RandomStream rng(3);
  numerics::add_gaussian_noise(received, received.average_power_w() / 2 * 1e-2, rng);
  std::vector<dsp::DbpTrace> traces{{received, fx.frame}};
  DbpConfig base;
  const auto r = dsp::dbp_param_sweep(traces, k, fx.tx, base, {1.2, 2.2, 3.2}, {0.0, 0.4, 1.6});
  CHECK(r.best_d_ps_nm_km == 2.2);
  CHECK(r.best_gamma_per_w_km == 0.0);
  CHECK(r.map.size() == 9);
  CHECK(r.map[3].d_dbp_ps_nm_km == 2.2);
  CHECK(r.map[3].gamma_dbp_per_w_km == 0.0);
  CHECK(r.map[3].gain_db == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(r.best_snr_db == doctest::Approx(r.edc_snr_db).epsilon(1e-9));

  dsp::DbpSweepOptions par;
  par.threads = 3;
  const auto r2 = dsp::dbp_param_sweep(traces, k, fx.tx, base, {1.2, 2.2, 3.2}, {0.0, 0.4, 1.6}, par);
  for (std::size_t i = 0; i < r.map.size(); ++i) CHECK(r.map[i].snr_db == r2.map[i].snr_db);

  CHECK_THROWS_AS(dsp::dbp_param_sweep(traces, k, fx.tx, base, {}, {0.0}), std::invalid_argument);
  CHECK_THROWS_AS(dsp::dbp_param_sweep(traces, k, fx.tx, base, {2.2}, {}), std::invalid_argument);
  CHECK_THROWS_AS(dsp::dbp_param_sweep({}, k, fx.tx, base, {2.2}, {0.0}), std::invalid_argument);
}

TEST_CASE("parameter sweep finds gamma on a nonlinear channel") {
  const Fixture fx(9.0, 2048);
  channel::LinkConfig link;
  channel::FiberSpan span;
  span.dispersion_ps_nm_km = 2.2;
  span.ref_wavelength_nm = 1330.0;
  link.signal_wavelength_nm = 1330.0;
  link.spans = {span, span};
  link.lop1_dbm = 9.0;
  link.lop2_rule = channel::FixedGain{0.283 * 75.5};
  link.ase_enabled = false;
  const auto out = channel::propagate_link(fx.launched, link, channel::SsfmConfig{}, 1);
  const auto k = LinkKnowledge::from_provenance(out.provenance);
  std::vector<dsp::DbpTrace> traces{{out.field, fx.frame}};
  const auto r = dsp::dbp_param_sweep(traces, k, fx.tx, DbpConfig{}, {2.2}, {0.0, 0.8, 1.6, 2.4});
  CHECK(r.best_gamma_per_w_km > 0.0);
  CHECK(r.best_snr_db > r.edc_snr_db + 1.0);
}
