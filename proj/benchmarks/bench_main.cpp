#include <benchmark/benchmark.h>

#include <memory>

#include "obdbp/channel.hpp"
#include "obdbp/dsp.hpp"
#include "obdbp/fft.hpp"
#include "obdbp/metrics.hpp"
#include "obdbp/txrx.hpp"

namespace {

using namespace obdbp;

struct Setup {
  txrx::TxConfig tx;
  txrx::SymbolFrame frame;
  txrx::Bits bits;
  numerics::SampledField field{numerics::TimeGrid(64, 1.0)};
  dsp::LinkKnowledge link;
};

Setup make_setup(std::size_t n_symbols) {
  Setup s;
  s.tx.n_symbols = n_symbols;
  auto c = std::make_shared<const txrx::Constellation>(256);
  s.bits = txrx::generate_bits(n_symbols * 16, 1);
  s.frame = txrx::map_bits(s.bits, c);
  s.field = numerics::set_average_power(txrx::shape(s.frame, s.tx), numerics::dbm_to_watts(6.0));
  s.link.wavelength_nm = 1310.0;
  s.link.spans = {{75.5, 0.283, 4e-3}, {75.5, 0.283, 2.5e-3}};
  return s;
}

void BM_Fft(benchmark::State& state) {
  std::vector<Complex> v(static_cast<std::size_t>(state.range(0)), Complex(1.0, 0.5));
  for (auto _ : state) {
    numerics::fft_forward(v);
    numerics::fft_inverse(v);
    benchmark::DoNotOptimize(v.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Fft)->RangeMultiplier(4)->Range(1 << 12, 1 << 18);

void BM_SsfmSpan(benchmark::State& state) {
  const auto s = make_setup(1 << 14);
  channel::FiberSpan span;
  channel::SsfmConfig cfg;
  cfg.steps_per_span = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(channel::ssfm_propagate(s.field, span, cfg));
}
BENCHMARK(BM_SsfmSpan)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Edc(benchmark::State& state) {
  const auto s = make_setup(1 << 15);
  for (auto _ : state) benchmark::DoNotOptimize(dsp::edc(s.field, s.link, 0.01));
}
BENCHMARK(BM_Edc)->Unit(benchmark::kMillisecond);

void BM_DbpSingleStep(benchmark::State& state) {
  const auto s = make_setup(1 << 15);
  dsp::DbpConfig cfg;
  cfg.kappa = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) benchmark::DoNotOptimize(dsp::dbp_single_step_wh(s.field, s.link, cfg));
}
BENCHMARK(BM_DbpSingleStep)->Arg(0)->Arg(5)->Unit(benchmark::kMillisecond);

void BM_DbpMultiStep(benchmark::State& state) {
  const auto s = make_setup(1 << 15);
  dsp::DbpConfig cfg;
  cfg.mode = dsp::DbpMode::kMultiStep;
  cfg.steps_per_span = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(dsp::dbp_multi_step(s.field, s.link, cfg));
}
BENCHMARK(BM_DbpMultiStep)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_Gmi256(benchmark::State& state) {
  const auto s = make_setup(1 << 15);
  auto rx = s.frame;
  numerics::RandomStream rng(2);
  for (auto& v : rx.x) v += 0.1 * rng.complex_normal();
  for (auto& v : rx.y) v += 0.1 * rng.complex_normal();
  for (auto _ : state) benchmark::DoNotOptimize(metrics::gmi_estimate(s.bits, rx, *s.frame.constellation));
}
BENCHMARK(BM_Gmi256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
