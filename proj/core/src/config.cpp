#include "obdbp/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#ifndef OBDBP_DEFAULT_DATA_DIR
#define OBDBP_DEFAULT_DATA_DIR "data"
#endif

namespace obdbp::harness {
namespace fs = std::filesystem;

namespace {

constexpr int kMaxPresetDepth = 8;

struct Ctx {
  std::string source;
  fs::path base_dir;
  int depth = 0;
};

[[noreturn]] void fail(const Ctx& ctx, const YAML::Node& node, const std::string& msg) {
  const auto mark = node.Mark();
  if (mark.is_null()) throw ConfigError(ctx.source + ": " + msg);
  throw ConfigError(ctx.source + ":" + std::to_string(mark.line + 1) + ": " + msg);
}

template <typename T>
T as(const Ctx& ctx, const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) fail(ctx, node, "'" + key + "' must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::BadConversion&) {
    fail(ctx, node, "'" + key + "' has an invalid value '" + node.Scalar() + "'");
  }
}

double as_double(const Ctx& ctx, const YAML::Node& node, const std::string& key) {
  return as<double>(ctx, node, key);
}

double finite(const Ctx& ctx, const YAML::Node& node, const std::string& key) {
  const double v = as_double(ctx, node, key);
  if (!std::isfinite(v)) fail(ctx, node, "'" + key + "' must be finite");
  return v;
}

double positive(const Ctx& ctx, const YAML::Node& node, const std::string& key) {
  const double v = finite(ctx, node, key);
  if (!(v > 0.0)) fail(ctx, node, "'" + key + "' must be > 0");
  return v;
}

unsigned as_unsigned(const Ctx& ctx, const YAML::Node& node, const std::string& key) {
  const auto v = as<long long>(ctx, node, key);
  if (v < 0 || v > 0xffffffffLL) fail(ctx, node, "'" + key + "' must be a non-negative integer");
  return static_cast<unsigned>(v);
}

void require_map(const Ctx& ctx, const YAML::Node& node, const std::string& what) {
  if (!node.IsMap()) fail(ctx, node, what + " must be a mapping");
}

void check_keys(const Ctx& ctx, const YAML::Node& node, std::initializer_list<const char*> allowed) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    if (!ok) fail(ctx, kv.first, "unknown key '" + key + "'");
  }
}

std::vector<double> sorted_list(const Ctx& ctx, const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence() || node.size() == 0) fail(ctx, node, "'" + key + "' must be a non-empty list");
  std::vector<double> v;
  for (const auto& item : node) v.push_back(finite(ctx, item, key));
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) fail(ctx, node, "'" + key + "' must be sorted ascending without duplicates");
  }
  return v;
}

fs::path resolve(const Ctx& ctx, const std::string& p) {
  fs::path path(p);
  if (path.is_relative()) path = ctx.base_dir / path;
  return fs::weakly_canonical(path);
}

YAML::Node load_yaml(const std::string& text, const std::string& source) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

channel::LinkConfig parse_link(const Ctx& ctx, const YAML::Node& node, std::string* name) {
  require_map(ctx, node, "link");
  check_keys(ctx, node, {"name", "signal_wavelength_nm", "spans", "amplifier", "lop2_table", "lop2_fixed_gain_db",
                         "rx_power_dbm", "ase_enabled", "rx_amp_ase"});
  channel::LinkConfig link;
  if (node["name"] && name) *name = as<std::string>(ctx, node["name"], "name");
  if (!node["signal_wavelength_nm"]) fail(ctx, node, "link needs 'signal_wavelength_nm'");
  link.signal_wavelength_nm = positive(ctx, node["signal_wavelength_nm"], "signal_wavelength_nm");

  const auto spans = node["spans"];
  if (!spans || !spans.IsSequence() || spans.size() == 0) fail(ctx, node, "link needs a non-empty 'spans' list");
  for (const auto& s : spans) {
    require_map(ctx, s, "span");
    check_keys(ctx, s, {"length_km", "alpha_db_per_km", "dispersion_ps_nm_km", "gamma_per_w_km"});
    channel::FiberSpan span;
    if (s["length_km"]) span.length_km = positive(ctx, s["length_km"], "length_km");
    if (s["alpha_db_per_km"]) span.alpha_db_per_km = finite(ctx, s["alpha_db_per_km"], "alpha_db_per_km");
    if (s["dispersion_ps_nm_km"]) span.dispersion_ps_nm_km = finite(ctx, s["dispersion_ps_nm_km"], "dispersion_ps_nm_km");
    if (s["gamma_per_w_km"]) span.gamma_per_w_km = finite(ctx, s["gamma_per_w_km"], "gamma_per_w_km");
    if (span.alpha_db_per_km < 0.0) fail(ctx, s["alpha_db_per_km"], "'alpha_db_per_km' must be >= 0");
    if (span.gamma_per_w_km < 0.0) fail(ctx, s["gamma_per_w_km"], "'gamma_per_w_km' must be >= 0");
    span.ref_wavelength_nm = link.signal_wavelength_nm;
    link.spans.push_back(span);
  }

  if (const auto amp = node["amplifier"]) {
    require_map(ctx, amp, "amplifier");
    check_keys(ctx, amp, {"profile_csv", "nf_db"});
    if (amp["profile_csv"] && amp["nf_db"]) fail(ctx, amp, "amplifier takes either 'profile_csv' or 'nf_db'");
    if (amp["profile_csv"]) {
      const auto path = resolve(ctx, as<std::string>(ctx, amp["profile_csv"], "profile_csv"));
      try {
        link.mid_amp.profile = channel::load_amplifier_profile(path);
      } catch (const std::exception& e) {
        fail(ctx, amp["profile_csv"], e.what());
      }
      link.mid_amp.profile_source = path.string();
      try {
        (void)channel::profile_lookup(*link.mid_amp.profile, link.signal_wavelength_nm);
      } catch (const std::exception& e) {
        fail(ctx, amp["profile_csv"], e.what());
      }
    } else if (amp["nf_db"]) {
      link.mid_amp.nf_db = finite(ctx, amp["nf_db"], "nf_db");
      if (link.mid_amp.nf_db < 0.0) fail(ctx, amp["nf_db"], "'nf_db' must be >= 0");
    }
  }

  if (node["lop2_table"] && node["lop2_fixed_gain_db"]) {
    fail(ctx, node, "link takes either 'lop2_table' or 'lop2_fixed_gain_db'");
  }
  if (const auto table = node["lop2_table"]) {
    require_map(ctx, table, "lop2_table");
    bool found = false;
    for (const auto& kv : table) {
      const double wl = finite(ctx, kv.first, "lop2_table wavelength");
      if (!kv.second.IsSequence() || kv.second.size() < 2) {
        fail(ctx, kv.second, "lop2_table rows must be a list of at least two [lop1_dbm, lop2_dbm] pairs");
      }
      channel::LopTable t;
      for (const auto& row : kv.second) {
        if (!row.IsSequence() || row.size() != 2) fail(ctx, row, "lop2_table row must be [lop1_dbm, lop2_dbm]");
        t.rows.emplace_back(finite(ctx, row[0], "lop1_dbm"), finite(ctx, row[1], "lop2_dbm"));
      }
      for (std::size_t i = 1; i < t.rows.size(); ++i) {
        if (!(t.rows[i].first > t.rows[i - 1].first)) fail(ctx, kv.second, "lop2_table rows must be sorted by lop1_dbm");
      }
      if (std::abs(wl - link.signal_wavelength_nm) < 1e-9) {
        link.lop2_rule = t;
        found = true;
      }
    }
    if (!found) fail(ctx, table, "lop2_table has no entry for the signal wavelength");
  } else if (node["lop2_fixed_gain_db"]) {
    link.lop2_rule = channel::FixedGain{finite(ctx, node["lop2_fixed_gain_db"], "lop2_fixed_gain_db")};
  }

  if (node["rx_power_dbm"]) link.rx_power_dbm = finite(ctx, node["rx_power_dbm"], "rx_power_dbm");
  if (node["ase_enabled"]) link.ase_enabled = as<bool>(ctx, node["ase_enabled"], "ase_enabled");
  if (node["rx_amp_ase"]) link.rx_amp_ase = as<bool>(ctx, node["rx_amp_ase"], "rx_amp_ase");
  return link;
}

channel::LinkConfig load_link_preset_ctx(const std::string& name, std::string* link_name) {
  const auto path = data_dir() / "presets" / "links" / (name + ".yaml");
  if (!fs::exists(path)) throw ConfigError("unknown link preset '" + name + "'");
  Ctx ctx{path.string(), path.parent_path(), 0};
  const auto root = load_yaml(read_file(path), ctx.source);
  auto link = parse_link(ctx, root, nullptr);
  if (link_name) *link_name = name;
  return link;
}

ExperimentConfig parse_root(const Ctx& ctx, const YAML::Node& root);

ExperimentConfig load_preset_ctx(const std::string& name, int depth) {
  const auto path = data_dir() / "presets" / "experiments" / (name + ".yaml");
  if (!fs::exists(path)) throw ConfigError("unknown experiment preset '" + name + "'");
  Ctx ctx{path.string(), path.parent_path(), depth};
  auto cfg = parse_root(ctx, load_yaml(read_file(path), ctx.source));
  cfg.preset_name = name;
  return cfg;
}

ExperimentConfig parse_root(const Ctx& ctx, const YAML::Node& root) {
  if (!root || root.IsNull()) throw ConfigError(ctx.source + ": empty configuration");
  require_map(ctx, root, "configuration");
  check_keys(ctx, root,
             {"preset", "link_preset", "link", "symbol_rate_bd", "qam_order", "n_symbols", "samples_per_symbol",
              "rolloff", "rrc_span_symbols", "lop1_dbm", "gamma_per_w_km", "b2b_snr_db", "tx_noise_fraction",
              "ssfm_steps_per_span", "ssfm_max_phase_rad", "nonlinear_mode", "compensation", "dbp", "seed", "traces",
              "threads", "lop_sweep_dbm", "kappa_sweep", "kappa_sweep_lop1_dbm", "dbp_grid"});

  ExperimentConfig cfg;
  // Defaults that follow the link unless set explicitly, whether here or
  // in a base preset.
  bool d_set = false, gamma_dbp_set = false, grid_d_set = false, grid_gamma_set = false;

  if (const auto p = root["preset"]) {
    if (ctx.depth >= kMaxPresetDepth) fail(ctx, p, "preset nesting too deep");
    const auto name = as<std::string>(ctx, p, "preset");
    try {
      cfg = load_preset_ctx(name, ctx.depth + 1);
    } catch (const ConfigError& e) {
      fail(ctx, p, e.what());
    }
    d_set = gamma_dbp_set = grid_d_set = grid_gamma_set = true;
  }

  if (root["link_preset"] && root["link"]) fail(ctx, root, "use either 'link_preset' or 'link', not both");
  if (const auto lp = root["link_preset"]) {
    const auto name = as<std::string>(ctx, lp, "link_preset");
    const double lop1 = cfg.link.lop1_dbm;
    try {
      cfg.link = load_link_preset_ctx(name, &cfg.link_name);
    } catch (const ConfigError& e) {
      fail(ctx, lp, e.what());
    }
    cfg.link.lop1_dbm = lop1;
    d_set = gamma_dbp_set = grid_d_set = grid_gamma_set = false;
  } else if (const auto l = root["link"]) {
    const double lop1 = cfg.link.lop1_dbm;
    cfg.link_name.clear();
    cfg.link = parse_link(ctx, l, &cfg.link_name);
    cfg.link.lop1_dbm = lop1;
    d_set = gamma_dbp_set = grid_d_set = grid_gamma_set = false;
  } else if (!root["preset"]) {
    fail(ctx, root, "configuration needs 'preset', 'link_preset' or 'link'");
  }

  if (const auto n = root["symbol_rate_bd"]) cfg.tx.symbol_rate_bd = positive(ctx, n, "symbol_rate_bd");
  if (const auto n = root["qam_order"]) {
    cfg.qam_order = as_unsigned(ctx, n, "qam_order");
    if (cfg.qam_order != 4 && cfg.qam_order != 16 && cfg.qam_order != 64 && cfg.qam_order != 256) {
      fail(ctx, n, "'qam_order' must be one of 4, 16, 64, 256");
    }
  }
  if (const auto n = root["n_symbols"]) {
    cfg.tx.n_symbols = as_unsigned(ctx, n, "n_symbols");
    if (cfg.tx.n_symbols < 64 || (cfg.tx.n_symbols & (cfg.tx.n_symbols - 1)) != 0) {
      fail(ctx, n, "'n_symbols' must be a power of two >= 64");
    }
  }
  if (const auto n = root["samples_per_symbol"]) {
    cfg.tx.samples_per_symbol = as_unsigned(ctx, n, "samples_per_symbol");
    if (cfg.tx.samples_per_symbol < 2 || (cfg.tx.samples_per_symbol & (cfg.tx.samples_per_symbol - 1)) != 0) {
      fail(ctx, n, "'samples_per_symbol' must be a power of two >= 2");
    }
  }
  if (const auto n = root["rolloff"]) {
    cfg.tx.rolloff = finite(ctx, n, "rolloff");
    if (!(cfg.tx.rolloff > 0.0 && cfg.tx.rolloff <= 1.0)) fail(ctx, n, "'rolloff' must be in (0, 1]");
  }
  if (const auto n = root["rrc_span_symbols"]) {
    cfg.tx.rrc_span_symbols = as_unsigned(ctx, n, "rrc_span_symbols");
    if (cfg.tx.rrc_span_symbols == 0) fail(ctx, n, "'rrc_span_symbols' must be >= 1");
  }
  if (const auto n = root["lop1_dbm"]) cfg.link.lop1_dbm = finite(ctx, n, "lop1_dbm");
  if (const auto n = root["gamma_per_w_km"]) {
    const double g = finite(ctx, n, "gamma_per_w_km");
    if (g < 0.0) fail(ctx, n, "'gamma_per_w_km' must be >= 0");
    for (auto& s : cfg.link.spans) s.gamma_per_w_km = g;
  }
  if (const auto n = root["b2b_snr_db"]) {
    cfg.b2b_snr_db = as_double(ctx, n, "b2b_snr_db");
    if (!(cfg.b2b_snr_db > 0.0)) fail(ctx, n, "'b2b_snr_db' must be > 0 dB (or .inf to disable)");
  }
  if (const auto n = root["tx_noise_fraction"]) {
    cfg.tx_noise_fraction = finite(ctx, n, "tx_noise_fraction");
    if (!(cfg.tx_noise_fraction >= 0.0 && cfg.tx_noise_fraction <= 1.0)) {
      fail(ctx, n, "'tx_noise_fraction' must be in [0, 1]");
    }
  }
  if (const auto n = root["ssfm_steps_per_span"]) cfg.ssfm.steps_per_span = as_unsigned(ctx, n, "ssfm_steps_per_span");
  if (const auto n = root["ssfm_max_phase_rad"]) cfg.ssfm.max_phase_per_step_rad = positive(ctx, n, "ssfm_max_phase_rad");
  if (const auto n = root["nonlinear_mode"]) {
    const auto v = as<std::string>(ctx, n, "nonlinear_mode");
    if (v == "manakov") {
      cfg.ssfm.mode = channel::NonlinearMode::kManakov;
    } else if (v == "scalar") {
      cfg.ssfm.mode = channel::NonlinearMode::kScalar;
    } else {
      fail(ctx, n, "'nonlinear_mode' must be 'manakov' or 'scalar'");
    }
    cfg.dbp.nonlinear = cfg.ssfm.mode;
  }
  if (const auto n = root["compensation"]) {
    const auto v = as<std::string>(ctx, n, "compensation");
    if (v == "edc") {
      cfg.compensation = Compensation::kEdc;
    } else if (v == "dbp") {
      cfg.compensation = Compensation::kDbp;
    } else {
      fail(ctx, n, "'compensation' must be 'edc' or 'dbp'");
    }
  }
  if (const auto d = root["dbp"]) {
    require_map(ctx, d, "dbp");
    check_keys(ctx, d, {"kappa", "d_dbp_ps_nm_km", "gamma_dbp_per_w_km", "mode", "steps_per_span"});
    if (d["kappa"]) {
      cfg.dbp.kappa = finite(ctx, d["kappa"], "kappa");
      if (!(cfg.dbp.kappa >= 0.0 && cfg.dbp.kappa <= 1.0)) fail(ctx, d["kappa"], "'kappa' must be in [0, 1]");
    }
    if (d["d_dbp_ps_nm_km"]) {
      cfg.dbp.d_dbp_ps_nm_km = finite(ctx, d["d_dbp_ps_nm_km"], "d_dbp_ps_nm_km");
      d_set = true;
    }
    if (d["gamma_dbp_per_w_km"]) {
      cfg.dbp.gamma_dbp_per_w_km = finite(ctx, d["gamma_dbp_per_w_km"], "gamma_dbp_per_w_km");
      if (cfg.dbp.gamma_dbp_per_w_km < 0.0) fail(ctx, d["gamma_dbp_per_w_km"], "'gamma_dbp_per_w_km' must be >= 0");
      gamma_dbp_set = true;
    }
    if (d["mode"]) {
      const auto v = as<std::string>(ctx, d["mode"], "mode");
      if (v == "single_step_wh") {
        cfg.dbp.mode = dsp::DbpMode::kSingleStepWh;
      } else if (v == "multi_step") {
        cfg.dbp.mode = dsp::DbpMode::kMultiStep;
      } else {
        fail(ctx, d["mode"], "'mode' must be 'single_step_wh' or 'multi_step'");
      }
    }
    if (d["steps_per_span"]) {
      cfg.dbp.steps_per_span = as_unsigned(ctx, d["steps_per_span"], "steps_per_span");
      if (cfg.dbp.steps_per_span == 0) fail(ctx, d["steps_per_span"], "'steps_per_span' must be >= 1");
    }
  }
  if (const auto n = root["seed"]) cfg.seed = as<std::uint64_t>(ctx, n, "seed");
  if (const auto n = root["traces"]) {
    cfg.traces = as_unsigned(ctx, n, "traces");
    if (cfg.traces == 0) fail(ctx, n, "'traces' must be >= 1");
  }
  if (const auto n = root["threads"]) cfg.threads = as_unsigned(ctx, n, "threads");
  if (const auto n = root["lop_sweep_dbm"]) cfg.lop_sweep_dbm = sorted_list(ctx, n, "lop_sweep_dbm");
  if (const auto n = root["kappa_sweep"]) {
    cfg.kappa_sweep = sorted_list(ctx, n, "kappa_sweep");
    if (cfg.kappa_sweep.front() < 0.0 || cfg.kappa_sweep.back() > 1.0) fail(ctx, n, "'kappa_sweep' must lie in [0, 1]");
  }
  if (const auto n = root["kappa_sweep_lop1_dbm"]) cfg.kappa_sweep_lop1_dbm = finite(ctx, n, "kappa_sweep_lop1_dbm");
  if (const auto g = root["dbp_grid"]) {
    require_map(ctx, g, "dbp_grid");
    check_keys(ctx, g, {"d_values_ps_nm_km", "gamma_values_per_w_km"});
    if (g["d_values_ps_nm_km"]) {
      cfg.dbp_grid.d_values_ps_nm_km = sorted_list(ctx, g["d_values_ps_nm_km"], "d_values_ps_nm_km");
      grid_d_set = true;
    }
    if (g["gamma_values_per_w_km"]) {
      cfg.dbp_grid.gamma_values_per_w_km = sorted_list(ctx, g["gamma_values_per_w_km"], "gamma_values_per_w_km");
      if (cfg.dbp_grid.gamma_values_per_w_km.front() < 0.0) {
        fail(ctx, g["gamma_values_per_w_km"], "'gamma_values_per_w_km' must be >= 0");
      }
      grid_gamma_set = true;
    }
  }

  if (!d_set) cfg.dbp.d_dbp_ps_nm_km = cfg.link.spans.at(0).dispersion_ps_nm_km;
  if (!gamma_dbp_set) cfg.dbp.gamma_dbp_per_w_km = cfg.link.spans.at(0).gamma_per_w_km;
  if (!grid_d_set) cfg.dbp_grid.d_values_ps_nm_km = {cfg.dbp.d_dbp_ps_nm_km};
  if (!grid_gamma_set) {
    cfg.dbp_grid.gamma_values_per_w_km = {0.0};
    if (cfg.dbp.gamma_dbp_per_w_km > 0.0) cfg.dbp_grid.gamma_values_per_w_km.push_back(cfg.dbp.gamma_dbp_per_w_km);
  }

  try {
    cfg.validate();
  } catch (const std::exception& e) {
    fail(ctx, root, e.what());
  }
  return cfg;
}

// Shortest text that parses back to the same double.
std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

void emit_list(YAML::Emitter& out, const std::vector<double>& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (double x : v) out << num(x);
  out << YAML::EndSeq;
}

}  // namespace

void ExperimentConfig::validate() const {
  link.validate();
  tx.validate();
  dbp.validate();
  if (qam_order != 4 && qam_order != 16 && qam_order != 64 && qam_order != 256) {
    throw std::invalid_argument("qam_order must be one of 4, 16, 64, 256");
  }
  if (!(b2b_snr_db > 0.0)) throw std::invalid_argument("b2b_snr_db must be > 0");
  if (!(tx_noise_fraction >= 0.0 && tx_noise_fraction <= 1.0)) {
    throw std::invalid_argument("tx_noise_fraction must be in [0, 1]");
  }
  if (traces == 0) throw std::invalid_argument("traces must be >= 1");
  auto sorted = [](const std::vector<double>& v) {
    if (v.empty()) return false;
    for (std::size_t i = 1; i < v.size(); ++i) {
      if (!(v[i] > v[i - 1])) return false;
    }
    return true;
  };
  if (!sorted(lop_sweep_dbm)) throw std::invalid_argument("lop_sweep_dbm must be non-empty and sorted");
  if (!sorted(kappa_sweep) || kappa_sweep.front() < 0.0 || kappa_sweep.back() > 1.0) {
    throw std::invalid_argument("kappa_sweep must be non-empty, sorted and within [0, 1]");
  }
  if (!sorted(dbp_grid.d_values_ps_nm_km) || !sorted(dbp_grid.gamma_values_per_w_km)) {
    throw std::invalid_argument("dbp_grid values must be non-empty and sorted");
  }
  if (const auto* table = std::get_if<channel::LopTable>(&link.lop2_rule)) {
    for (double p : lop_sweep_dbm) (void)channel::resolve_lop2_dbm(*table, p);
    if (kappa_sweep_lop1_dbm) (void)channel::resolve_lop2_dbm(*table, *kappa_sweep_lop1_dbm);
  }
}

fs::path data_dir() {
  if (const char* env = std::getenv("OBDBP_DATA_DIR"); env && *env) return fs::path(env);
  return fs::path(OBDBP_DEFAULT_DATA_DIR);
}

ExperimentConfig parse_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError(path.string() + ": file not found");
  const auto abs = fs::absolute(path);
  return parse_config_text(read_file(abs), path.string(), abs.parent_path());
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& source_name, const fs::path& base_dir) {
  Ctx ctx{source_name, base_dir, 0};
  return parse_root(ctx, load_yaml(text, source_name));
}

ExperimentConfig load_preset(const std::string& name) { return load_preset_ctx(name, 0); }

channel::LinkConfig load_link_preset(const std::string& name) { return load_link_preset_ctx(name, nullptr); }

std::string serialize_config(const ExperimentConfig& cfg) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  if (!cfg.preset_name.empty()) out << YAML::Key << "preset" << YAML::Value << cfg.preset_name;

  const auto& link = cfg.link;
  out << YAML::Key << "link" << YAML::Value << YAML::BeginMap;
  if (!cfg.link_name.empty()) out << YAML::Key << "name" << YAML::Value << cfg.link_name;
  out << YAML::Key << "signal_wavelength_nm" << YAML::Value << num(link.signal_wavelength_nm);
  out << YAML::Key << "spans" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : link.spans) {
    out << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "length_km" << YAML::Value << num(s.length_km);
    out << YAML::Key << "alpha_db_per_km" << YAML::Value << num(s.alpha_db_per_km);
    out << YAML::Key << "dispersion_ps_nm_km" << YAML::Value << num(s.dispersion_ps_nm_km);
    out << YAML::Key << "gamma_per_w_km" << YAML::Value << num(s.gamma_per_w_km);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "amplifier" << YAML::Value << YAML::Flow << YAML::BeginMap;
  if (link.mid_amp.profile) {
    out << YAML::Key << "profile_csv" << YAML::Value << link.mid_amp.profile_source;
  } else {
    out << YAML::Key << "nf_db" << YAML::Value << num(link.mid_amp.nf_db);
  }
  out << YAML::EndMap;
  if (const auto* table = std::get_if<channel::LopTable>(&link.lop2_rule)) {
    out << YAML::Key << "lop2_table" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << num(link.signal_wavelength_nm) << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (const auto& [a, b] : table->rows) out << YAML::Flow << YAML::BeginSeq << num(a) << num(b) << YAML::EndSeq;
    out << YAML::EndSeq << YAML::EndMap;
  } else {
    out << YAML::Key << "lop2_fixed_gain_db" << YAML::Value << num(std::get<channel::FixedGain>(link.lop2_rule).gain_db);
  }
  out << YAML::Key << "rx_power_dbm" << YAML::Value << num(link.rx_power_dbm);
  out << YAML::Key << "ase_enabled" << YAML::Value << link.ase_enabled;
  out << YAML::Key << "rx_amp_ase" << YAML::Value << link.rx_amp_ase;
  out << YAML::EndMap;

  out << YAML::Key << "symbol_rate_bd" << YAML::Value << num(cfg.tx.symbol_rate_bd);
  out << YAML::Key << "qam_order" << YAML::Value << cfg.qam_order;
  out << YAML::Key << "n_symbols" << YAML::Value << cfg.tx.n_symbols;
  out << YAML::Key << "samples_per_symbol" << YAML::Value << cfg.tx.samples_per_symbol;
  out << YAML::Key << "rolloff" << YAML::Value << num(cfg.tx.rolloff);
  out << YAML::Key << "rrc_span_symbols" << YAML::Value << cfg.tx.rrc_span_symbols;
  out << YAML::Key << "lop1_dbm" << YAML::Value << num(link.lop1_dbm);
  out << YAML::Key << "b2b_snr_db" << YAML::Value << num(cfg.b2b_snr_db);
  out << YAML::Key << "tx_noise_fraction" << YAML::Value << num(cfg.tx_noise_fraction);
  out << YAML::Key << "ssfm_steps_per_span" << YAML::Value << cfg.ssfm.steps_per_span;
  out << YAML::Key << "ssfm_max_phase_rad" << YAML::Value << num(cfg.ssfm.max_phase_per_step_rad);
  out << YAML::Key << "nonlinear_mode" << YAML::Value
      << (cfg.ssfm.mode == channel::NonlinearMode::kManakov ? "manakov" : "scalar");
  out << YAML::Key << "compensation" << YAML::Value << (cfg.compensation == Compensation::kEdc ? "edc" : "dbp");
  out << YAML::Key << "dbp" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "kappa" << YAML::Value << num(cfg.dbp.kappa);
  out << YAML::Key << "d_dbp_ps_nm_km" << YAML::Value << num(cfg.dbp.d_dbp_ps_nm_km);
  out << YAML::Key << "gamma_dbp_per_w_km" << YAML::Value << num(cfg.dbp.gamma_dbp_per_w_km);
  out << YAML::Key << "mode" << YAML::Value
      << (cfg.dbp.mode == dsp::DbpMode::kSingleStepWh ? "single_step_wh" : "multi_step");
  out << YAML::Key << "steps_per_span" << YAML::Value << cfg.dbp.steps_per_span;
  out << YAML::EndMap;
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  out << YAML::Key << "traces" << YAML::Value << cfg.traces;
  out << YAML::Key << "threads" << YAML::Value << cfg.threads;
  out << YAML::Key << "lop_sweep_dbm" << YAML::Value;
  emit_list(out, cfg.lop_sweep_dbm);
  out << YAML::Key << "kappa_sweep" << YAML::Value;
  emit_list(out, cfg.kappa_sweep);
  if (cfg.kappa_sweep_lop1_dbm) {
    out << YAML::Key << "kappa_sweep_lop1_dbm" << YAML::Value << num(*cfg.kappa_sweep_lop1_dbm);
  }
  out << YAML::Key << "dbp_grid" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "d_values_ps_nm_km" << YAML::Value;
  emit_list(out, cfg.dbp_grid.d_values_ps_nm_km);
  out << YAML::Key << "gamma_values_per_w_km" << YAML::Value;
  emit_list(out, cfg.dbp_grid.gamma_values_per_w_km);
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::string config_hash(const ExperimentConfig& cfg) {
  // The worker count does not change any result, so it stays out of the hash.
  ExperimentConfig canonical = cfg;
  canonical.threads = 0;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : serialize_config(canonical)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace obdbp::harness
