#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "obdbp/config.hpp"
#include "obdbp/experiment.hpp"

using namespace obdbp;
using harness::ExperimentConfig;

namespace {

ExperimentConfig small(const std::string& preset = "1310nm_50gbd") {
  auto cfg = harness::load_preset(preset);
  cfg.tx.n_symbols = 4096;
  cfg.traces = 2;
  cfg.threads = 1;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("a trace is fully determined by seed and index") {
  const auto cfg = small();
  const auto a = harness::run_single(cfg, 0);
  CHECK(a == harness::run_single(cfg, 0));
  CHECK(a.snr_db != harness::run_single(cfg, 1).snr_db);
  auto other = cfg;
  other.seed = 2;
  CHECK(a.snr_db != harness::run_single(other, 0).snr_db);
}

TEST_CASE("a noiseless linear link under EDC hits the SNR cap") {
  auto cfg = small();
  cfg.link.ase_enabled = false;
  cfg.b2b_snr_db = INFINITY;
  for (auto& s : cfg.link.spans) s.gamma_per_w_km = 0.0;
  cfg.compensation = harness::Compensation::kEdc;
  const auto r = harness::run_single(cfg, 0);
  // Round-off through several transforms, far above any physical floor.
  CHECK(r.snr_db > 100.0);
  CHECK(r.gmi_bits == doctest::Approx(16.0));
}

TEST_CASE("link noise pulls SNR below the back-to-back floor") {
  auto cfg = small();
  cfg.compensation = harness::Compensation::kEdc;
  cfg.link.lop1_dbm = 0.0;
  const auto r = harness::run_experiment(cfg);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].snr_db < 19.89);
  CHECK(r.records[0].snr_db > 15.0);
  CHECK(r.records[0].n_traces == 2);
  CHECK(r.records[0].air_bps == doctest::Approx(r.records[0].gmi_bits * 50e9));
}

TEST_CASE("without fibre nonlinearity DBP and EDC agree") {
  auto cfg = small();
  for (auto& s : cfg.link.spans) s.gamma_per_w_km = 0.0;
  cfg.dbp.gamma_dbp_per_w_km = 0.0;
  const auto r = harness::sweep_lop(cfg, {0.0, 6.0});
  REQUIRE(r.records.size() == 4);
  // EDC records first, then DBP, each in power order.
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(r.records[i].coords.compensation == "edc");
    CHECK(r.records[i + 2].coords.compensation == "dbp");
    CHECK(r.records[i + 2].coords.lop1_dbm == r.records[i].coords.lop1_dbm);
    CHECK(r.records[i + 2].snr_db == doctest::Approx(r.records[i].snr_db).epsilon(1e-9));
  }
}

TEST_CASE("parallel sweeps reproduce serial sweeps exactly") {
  auto cfg = small();
  cfg.traces = 3;
  const auto serial = harness::sweep_lop(cfg, {-3.0, 3.0});
  cfg.threads = 4;
  const auto par = harness::sweep_lop(cfg, {-3.0, 3.0});
  CHECK(harness::format_csv(serial) == harness::format_csv(par));
}

TEST_CASE("LOP sweep outside the LOP2 table is refused") {
  const auto cfg = small();
  CHECK_THROWS_AS(harness::sweep_lop(cfg, {0.0, 12.0}), std::invalid_argument);
  CHECK_THROWS_AS(harness::sweep_lop(cfg, {}), std::invalid_argument);
}

TEST_CASE("kappa is irrelevant when the DBP dispersion is zero") {
  auto cfg = small();
  cfg.dbp.d_dbp_ps_nm_km = 0.0;
  const auto r = harness::sweep_kappa(cfg, {0.0, 0.5, 1.0}, 6.0);
  REQUIRE(r.records.size() == 4);
  CHECK(r.records[0].snr_db == doctest::Approx(r.records[1].snr_db).epsilon(1e-9));
  CHECK(r.records[0].snr_db == doctest::Approx(r.records[2].snr_db).epsilon(1e-9));
  CHECK(r.records[3].coords.compensation == "edc");
  CHECK_THROWS_AS(harness::sweep_kappa(cfg, {1.5}, 6.0), std::invalid_argument);
}

TEST_CASE("dbp grid sweep labels and surface") {
  auto cfg = small();
  cfg.link.lop1_dbm = 6.0;
  const auto r = harness::sweep_dbp_grid(cfg, {0.0, 0.01}, {0.0, 1.6});
  CHECK(r.axis == "dbp_grid");
  CHECK(r.records.size() == 6);
  CHECK(std::isnan(r.records[0].gmi_bits));
  CHECK_THROWS_AS(harness::sweep_dbp_grid(cfg, {}, {0.0}), std::invalid_argument);
}

TEST_CASE("CSV output: fixed header, metadata and byte stability") {
  const auto cfg = small();
  const auto r = harness::sweep_lop(cfg, {0.0, 3.0});
  const auto text = harness::format_csv(r);
  CHECK(text.find("lop1_dbm,lop2_dbm,wavelength_nm,symbol_rate_bd,kappa,compensation,snr_db,gmi_bits,air_gbps,"
                  "n_traces,seed\n") != std::string::npos);
  CHECK(text.find("# config_hash=" + harness::config_hash(cfg)) != std::string::npos);
  CHECK(text.find("# tool_version=") != std::string::npos);
  CHECK(text.find("optimal_lop1_dbm") != std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "obdbp_emit_test";
  std::filesystem::create_directories(dir);
  harness::emit_csv(r, dir / "a.csv");
  harness::emit_csv(harness::sweep_lop(cfg, {0.0, 3.0}), dir / "b.csv");
  CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
  CHECK(slurp(dir / "a.csv") == text);

  harness::emit_plot_data(r, dir / "a.dat");
  const auto plot = slurp(dir / "a.dat");
  CHECK(plot.find("\n\n\n") != std::string::npos);
  CHECK(plot.find("edc") != std::string::npos);
  CHECK(plot.find("dbp") != std::string::npos);

  CHECK_THROWS_AS(harness::emit_csv(harness::SweepResult{}, dir / "c.csv"), std::invalid_argument);
  CHECK_THROWS_AS(harness::emit_csv(r, dir / "missing" / "x.csv"), std::runtime_error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("optimal_lop picks the maximum of the named compensation") {
  harness::SweepResult r;
  for (auto [p, s] : {std::pair{0.0, 15.0}, std::pair{3.0, 17.0}, std::pair{6.0, 16.0}}) {
    metrics::MetricsRecord rec;
    rec.coords.lop1_dbm = p;
    rec.coords.compensation = "edc";
    rec.snr_db = s;
    r.records.push_back(rec);
  }
  CHECK(harness::optimal_lop(r, "edc") == 3.0);
  CHECK_THROWS_AS(harness::optimal_lop(r, "dbp"), std::invalid_argument);
}
