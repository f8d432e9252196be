// obdbp: run single points and sweeps of the O-band DBP simulator.
//
//   obdbp run         --preset 1310nm_50gbd --traces 10
//   obdbp sweep-lop   --config my.yaml --out lop.csv
//   obdbp sweep-kappa --preset 1310nm_50gbd --lop1 6 --format plot
//   obdbp sweep-dbp   --preset 1290nm_50gbd
//   obdbp config      --preset 1310nm_50gbd      (prints the resolved config)
//
// Exit status: 0 success, 1 configuration error, 2 runtime error.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "obdbp/config.hpp"
#include "obdbp/experiment.hpp"

namespace {

using namespace obdbp;

struct Common {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> traces;
  std::optional<unsigned> threads;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* sub, Common& c) {
  auto* cfg = sub->add_option("--config", c.config, "Experiment config file (YAML)");
  auto* preset = sub->add_option("--preset", c.preset, "Shipped experiment preset, e.g. 1310nm_50gbd");
  cfg->excludes(preset);
  sub->add_option("--seed", c.seed, "Master seed (overrides the config)");
  sub->add_option("--traces", c.traces, "Number of traces (overrides the config)")->check(CLI::PositiveNumber);
  sub->add_option("--threads", c.threads, "Worker threads, 0 = all cores (overrides the config)");
  sub->add_option("--out", c.out, "Output path (default: stdout)");
  sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "plot"}));
}

harness::ExperimentConfig load(const Common& c) {
  if (c.config.empty() == c.preset.empty()) throw harness::ConfigError("exactly one of --config or --preset is required");
  auto cfg = c.preset.empty() ? harness::parse_config(c.config) : harness::load_preset(c.preset);
  if (c.seed) cfg.seed = *c.seed;
  if (c.traces) cfg.traces = *c.traces;
  if (c.threads) cfg.threads = *c.threads;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw harness::ConfigError(e.what());
  }
  return cfg;
}

void write(const harness::SweepResult& r, const Common& c) {
  if (c.out.empty()) {
    std::cout << (c.format == "csv" ? harness::format_csv(r) : harness::format_plot_data(r));
  } else if (c.format == "csv") {
    harness::emit_csv(r, c.out);
  } else {
    harness::emit_plot_data(r, c.out);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"O-band single-step digital backpropagation simulator"};
  app.set_version_flag("--version", std::string(harness::kToolVersion));
  app.require_subcommand(1);

  Common run_opts, lop_opts, kappa_opts, dbp_opts, cfg_opts;
  std::optional<double> lop1, kappa_lop1;

  auto* run = app.add_subcommand("run", "Aggregate metrics at the configured launch power");
  add_common(run, run_opts);
  run->add_option("--lop1", lop1, "First-span launch power in dBm (overrides the config)");

  auto* sweep_lop = app.add_subcommand("sweep-lop", "EDC and DBP versus first-span launch power");
  add_common(sweep_lop, lop_opts);

  auto* sweep_kappa = app.add_subcommand("sweep-kappa", "DBP gain versus Wiener-Hammerstein split");
  add_common(sweep_kappa, kappa_opts);
  sweep_kappa->add_option("--lop1", kappa_lop1, "Fixed launch power in dBm (default: DBP-optimal)");

  auto* sweep_dbp = app.add_subcommand("sweep-dbp", "DBP dispersion / nonlinear coefficient grid");
  add_common(sweep_dbp, dbp_opts);

  auto* show = app.add_subcommand("config", "Print the fully resolved configuration");
  add_common(show, cfg_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      auto cfg = load(run_opts);
      if (lop1) cfg.link.lop1_dbm = *lop1;
      write(harness::run_experiment(cfg), run_opts);
    } else if (*sweep_lop) {
      const auto cfg = load(lop_opts);
      write(harness::sweep_lop(cfg, cfg.lop_sweep_dbm), lop_opts);
    } else if (*sweep_kappa) {
      const auto cfg = load(kappa_opts);
      write(harness::sweep_kappa(cfg, cfg.kappa_sweep, kappa_lop1), kappa_opts);
    } else if (*sweep_dbp) {
      const auto cfg = load(dbp_opts);
      write(harness::sweep_dbp_grid(cfg, cfg.dbp_grid.d_values_ps_nm_km, cfg.dbp_grid.gamma_values_per_w_km),
            dbp_opts);
    } else if (*show) {
      std::cout << harness::serialize_config(load(cfg_opts));
    }
  } catch (const harness::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
