#include "harness/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "seqsoc/csv.hpp"

namespace seqsoc::harness {

bool ScenarioConfig::operator==(const ScenarioConfig& o) const {
  return seed == o.seed && output_dir == o.output_dir && cell_preset == o.cell_preset && cell == o.cell &&
         initial_state == o.initial_state && ohmic == o.ohmic && rc == o.rc && gap_after_ohmic == o.gap_after_ohmic &&
         gap_after_rc == o.gap_after_rc && drive == o.drive && data == o.data && guess == o.guess &&
         tuning == o.tuning && bands == o.bands && analyze == o.analyze && compare == o.compare;
}

CellSpec cell_preset(const std::string& name) {
  if (name == "samsung-18650-20C") return CellSpec::samsung_18650_20c();
  if (name == "samsung-18650-40C") return CellSpec::samsung_18650_40c();
  throw ConfigError("unknown cell preset '" + name + "'");
}

std::vector<std::string> cell_preset_names() { return {"samsung-18650-20C", "samsung-18650-40C"}; }

namespace {

class Reader {
public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void fail(const YAML::Node& node, const std::string& what) const {
    const auto mark = node.Mark();
    std::string where = source_;
    if (!mark.is_null()) where += ":" + std::to_string(mark.line + 1);
    throw ConfigError(where + ": " + what);
  }

  /// Rejects keys outside `allowed`, so typos do not silently keep defaults.
  void keys(const YAML::Node& map, const std::string& section, std::initializer_list<const char*> allowed) const {
    if (!map.IsMap()) fail(map, "'" + section + "' must be a mapping");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& kv : map) {
      const auto key = kv.first.as<std::string>();
      if (!ok.count(key)) fail(kv.first, "unknown key '" + key + "' in '" + section + "'");
    }
  }

  template <class T>
  void get(const YAML::Node& map, const char* key, T& out) const {
    const auto node = map[key];
    if (!node) return;
    if (!node.IsScalar()) fail(node, std::string("'") + key + "' must be a scalar");
    try {
      out = node.as<T>();
    } catch (const YAML::Exception&) {
      fail(node, std::string("'") + key + "' has an invalid value '" + node.Scalar() + "'");
    }
  }

  void get_list(const YAML::Node& map, const char* key, std::vector<double>& out) const {
    const auto node = map[key];
    if (!node) return;
    if (!node.IsSequence()) fail(node, std::string("'") + key + "' must be a list");
    std::vector<double> values;
    for (const auto& item : node) {
      try {
        values.push_back(item.as<double>());
      } catch (const YAML::Exception&) {
        fail(item, std::string("'") + key + "' holds a non-numeric entry");
      }
    }
    out = std::move(values);
  }

  YAML::Node section(const YAML::Node& root, const char* key) const {
    const auto node = root[key];
    if (node && !node.IsMap()) fail(node, std::string("'") + key + "' must be a mapping");
    return node;
  }

private:
  std::string source_;
};

Sensitivity parse_sensitivity(const Reader& r, const YAML::Node& node, const char* key, Sensitivity fallback) {
  const auto n = node[key];
  if (!n) return fallback;
  const auto s = n.as<std::string>();
  if (s == "one_step") return Sensitivity::one_step;
  if (s == "recursive") return Sensitivity::recursive;
  r.fail(n, std::string("'") + key + "' must be one_step or recursive");
}

const char* sensitivity_name(Sensitivity s) { return s == Sensitivity::one_step ? "one_step" : "recursive"; }

void read_plan(const Reader& r, const YAML::Node& node, const char* name, InjectionPlan& plan) {
  if (!node) return;
  r.keys(node, name, {"frequencies_hz", "amplitudes_a", "duration_s", "t_s", "f_3db_hz", "hold_up_s"});
  r.get_list(node, "frequencies_hz", plan.frequencies);
  r.get_list(node, "amplitudes_a", plan.amplitudes);
  r.get(node, "duration_s", plan.duration);
  r.get(node, "t_s", plan.t_s);
  r.get(node, "f_3db_hz", plan.f_3db);
  r.get(node, "hold_up_s", plan.hold_up);
}

ScenarioConfig from_yaml(const YAML::Node& root, const Reader& r) {
  ScenarioConfig cfg;
  if (!root || root.IsNull()) return cfg;
  r.keys(root, "<root>",
         {"seed", "output_dir", "cell", "initial_state", "steps", "drive", "data", "guess", "tuning", "report",
          "analyze", "compare"});
  r.get(root, "seed", cfg.seed);
  r.get(root, "output_dir", cfg.output_dir);

  if (const auto cell = r.section(root, "cell")) {
    r.keys(cell, "cell",
           {"preset", "name", "capacity_ah", "coulombic_efficiency", "r_s_ohm", "r_t_ohm", "tau_s", "sigma_v", "ocv"});
    if (const auto preset = cell["preset"]) {
      const auto name = preset.as<std::string>();
      try {
        cfg.cell = cell_preset(name);
      } catch (const ConfigError& e) {
        r.fail(preset, e.what());
      }
      cfg.cell_preset = name;
    } else {
      cfg.cell_preset.clear();
    }
    r.get(cell, "name", cfg.cell.name);
    r.get(cell, "capacity_ah", cfg.cell.q_b);
    r.get(cell, "coulombic_efficiency", cfg.cell.eta);
    r.get(cell, "r_s_ohm", cfg.cell.ecm.r_s);
    r.get(cell, "r_t_ohm", cfg.cell.ecm.r_t);
    r.get(cell, "tau_s", cfg.cell.ecm.tau);
    r.get(cell, "sigma_v", cfg.cell.sigma_v);
    std::vector<double> k{cfg.cell.ocv.k0, cfg.cell.ocv.k1, cfg.cell.ocv.k2, cfg.cell.ocv.k3, cfg.cell.ocv.k4};
    r.get_list(cell, "ocv", k);
    if (k.size() != 5) r.fail(cell["ocv"], "'ocv' needs exactly five coefficients");
    cfg.cell.ocv = {k[0], k[1], k[2], k[3], k[4]};
  }

  if (const auto init = r.section(root, "initial_state")) {
    r.keys(init, "initial_state", {"soc", "v_c"});
    r.get(init, "soc", cfg.initial_state.z);
    r.get(init, "v_c", cfg.initial_state.v_c);
  }

  if (const auto steps = r.section(root, "steps")) {
    r.keys(steps, "steps", {"ohmic", "rc", "gap_after_ohmic_s", "gap_after_rc_s"});
    read_plan(r, steps["ohmic"], "ohmic", cfg.ohmic);
    read_plan(r, steps["rc"], "rc", cfg.rc);
    r.get(steps, "gap_after_ohmic_s", cfg.gap_after_ohmic);
    r.get(steps, "gap_after_rc_s", cfg.gap_after_rc);
  }

  if (const auto drive = r.section(root, "drive")) {
    r.keys(drive, "drive", {"source", "duration_s", "t_s", "peak_a", "profile_seed", "path"});
    std::string source = "synthetic";
    r.get(drive, "source", source);
    if (source == "synthetic") {
      cfg.drive.kind = DriveSource::Kind::synthetic;
    } else if (source == "csv") {
      cfg.drive.kind = DriveSource::Kind::csv;
    } else {
      r.fail(drive["source"], "drive 'source' must be synthetic or csv");
    }
    r.get(drive, "duration_s", cfg.drive.duration);
    r.get(drive, "t_s", cfg.drive.t_s);
    r.get(drive, "peak_a", cfg.drive.peak);
    r.get(drive, "profile_seed", cfg.drive.profile_seed);
    r.get(drive, "path", cfg.drive.path);
    if (cfg.drive.kind == DriveSource::Kind::csv && cfg.drive.path.empty()) {
      r.fail(drive, "drive source csv needs 'path'");
    }
  }

  if (const auto data = r.section(root, "data")) {
    r.keys(data, "data", {"source", "ohmic", "rc", "drive"});
    std::string source = "simulate";
    r.get(data, "source", source);
    if (source == "simulate") {
      cfg.data.kind = DataSource::Kind::simulate;
    } else if (source == "csv") {
      cfg.data.kind = DataSource::Kind::csv;
    } else {
      r.fail(data["source"], "data 'source' must be simulate or csv");
    }
    r.get(data, "ohmic", cfg.data.ohmic);
    r.get(data, "rc", cfg.data.rc);
    r.get(data, "drive", cfg.data.drive);
    if (cfg.data.kind == DataSource::Kind::csv &&
        (cfg.data.ohmic.empty() || cfg.data.rc.empty() || cfg.data.drive.empty())) {
      r.fail(data, "data source csv needs 'ohmic', 'rc' and 'drive' paths");
    }
  }

  if (const auto guess = r.section(root, "guess")) {
    r.keys(guess, "guess", {"r_s", "r_t", "tau", "q_b", "soc", "v_c"});
    r.get(guess, "r_s", cfg.guess.r_s);
    r.get(guess, "r_t", cfg.guess.r_t);
    r.get(guess, "tau", cfg.guess.tau);
    r.get(guess, "q_b", cfg.guess.q_b);
    r.get(guess, "soc", cfg.guess.soc);
    r.get(guess, "v_c", cfg.guess.v_c);
  }

  if (const auto t = r.section(root, "tuning")) {
    r.keys(t, "tuning",
           {"sigma_v", "param_walk_rel", "q_b_walk", "v_c_walk", "soc_walk", "initial_std", "sensitivity_depth",
            "min_excitation", "divergence_sigma", "divergence_steps", "macro_ratio"});
    auto& tn = cfg.tuning;
    r.get(t, "sigma_v", tn.sigma_v);
    r.get(t, "param_walk_rel", tn.param_walk_rel);
    r.get(t, "q_b_walk", tn.q_b_walk);
    r.get(t, "v_c_walk", tn.v_c_walk);
    r.get(t, "soc_walk", tn.soc_walk);
    if (const auto sd = r.section(t, "initial_std")) {
      r.keys(sd, "initial_std", {"r_s", "r_t", "tau", "q_b", "v_c", "soc"});
      r.get(sd, "r_s", tn.r_s_std);
      r.get(sd, "r_t", tn.r_t_std);
      r.get(sd, "tau", tn.tau_std);
      r.get(sd, "q_b", tn.q_b_std);
      r.get(sd, "v_c", tn.v_c_std);
      r.get(sd, "soc", tn.soc_std);
    }
    if (const auto sens = r.section(t, "sensitivity_depth")) {
      r.keys(sens, "sensitivity_depth", {"rc", "soc"});
      tn.rc_sensitivity = parse_sensitivity(r, sens, "rc", tn.rc_sensitivity);
      tn.soc_sensitivity = parse_sensitivity(r, sens, "soc", tn.soc_sensitivity);
    }
    r.get(t, "min_excitation", tn.min_excitation);
    r.get(t, "divergence_sigma", tn.divergence_sigma);
    r.get(t, "divergence_steps", tn.divergence_steps);
    r.get(t, "macro_ratio", tn.macro_ratio);
  }

  if (const auto b = r.section(root, "report")) {
    r.keys(b, "report", {"band_r_s", "band_r_t", "band_tau", "band_q_b", "band_soc", "hold_s", "tail_window_s"});
    r.get(b, "band_r_s", cfg.bands.r_s);
    r.get(b, "band_r_t", cfg.bands.r_t);
    r.get(b, "band_tau", cfg.bands.tau);
    r.get(b, "band_q_b", cfg.bands.q_b);
    r.get(b, "band_soc", cfg.bands.soc);
    r.get(b, "hold_s", cfg.bands.hold_s);
    r.get(b, "tail_window_s", cfg.bands.tail_window_s);
  }

  if (const auto a = r.section(root, "analyze")) {
    r.keys(a, "analyze", {"frequencies_hz", "t_c_s", "amplitude_a", "z0", "ocv_window"});
    r.get_list(a, "frequencies_hz", cfg.analyze.frequencies);
    r.get(a, "t_c_s", cfg.analyze.t_c);
    r.get(a, "amplitude_a", cfg.analyze.amplitude);
    r.get(a, "z0", cfg.analyze.z0);
    std::vector<double> window{cfg.analyze.ocv_lo, cfg.analyze.ocv_hi};
    r.get_list(a, "ocv_window", window);
    if (window.size() != 2) r.fail(a["ocv_window"], "'ocv_window' needs two entries");
    cfg.analyze.ocv_lo = window[0];
    cfg.analyze.ocv_hi = window[1];
  }

  if (const auto c = r.section(root, "compare")) {
    r.keys(c, "compare", {"seeds", "threads", "multisine_hz", "amplitude_a", "duration_s", "rc_tolerance"});
    r.get(c, "seeds", cfg.compare.seeds);
    r.get(c, "threads", cfg.compare.threads);
    r.get_list(c, "multisine_hz", cfg.compare.multisine);
    r.get(c, "amplitude_a", cfg.compare.amplitude);
    r.get(c, "duration_s", cfg.compare.duration);
    r.get(c, "rc_tolerance", cfg.compare.rc_tolerance);
  }
  return cfg;
}

std::string num(double v) { return csv::format_number(v); }

void emit_list(YAML::Emitter& e, const std::vector<double>& xs) {
  e << YAML::Flow << YAML::BeginSeq;
  for (double x : xs) e << num(x);
  e << YAML::EndSeq;
}

void emit_plan(YAML::Emitter& e, const char* name, const InjectionPlan& p) {
  e << YAML::Key << name << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "frequencies_hz" << YAML::Value;
  emit_list(e, p.frequencies);
  e << YAML::Key << "amplitudes_a" << YAML::Value;
  emit_list(e, p.amplitudes);
  e << YAML::Key << "duration_s" << YAML::Value << num(p.duration);
  e << YAML::Key << "t_s" << YAML::Value << num(p.t_s);
  e << YAML::Key << "f_3db_hz" << YAML::Value << num(p.f_3db);
  e << YAML::Key << "hold_up_s" << YAML::Value << num(p.hold_up);
  e << YAML::EndMap;
}

} // namespace

void ScenarioConfig::validate() const {
  try {
    cell.validate();
    ohmic.validate();
    rc.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(initial_state.z > 0.0 && initial_state.z < 1.0, "initial_state.soc must lie in (0, 1)");
  require(gap_after_ohmic >= 0.0 && gap_after_rc >= 0.0, "inter-step gaps must be non-negative");
  require(drive.duration > 0.0 && drive.t_s > 0.0, "drive duration and t_s must be positive");
  require(guess.r_s > 0.0 && guess.r_t > 0.0 && guess.tau > 0.0 && guess.q_b > 0.0, "initial guesses must be positive");
  require(guess.soc > 0.0 && guess.soc < 1.0, "guess.soc must lie in (0, 1)");
  require(tuning.sigma_v > 0.0, "tuning.sigma_v must be positive");
  require(tuning.macro_ratio >= 1, "tuning.macro_ratio must be at least 1");
  require(tuning.divergence_steps >= 1, "tuning.divergence_steps must be at least 1");
  require(analyze.t_c > 0.0 && analyze.amplitude > 0.0, "analyze t_c_s and amplitude_a must be positive");
  require(analyze.z0 > 0.0 && analyze.z0 < 1.0, "analyze z0 must lie in (0, 1)");
  require(analyze.ocv_lo > 0.0 && analyze.ocv_lo < analyze.ocv_hi && analyze.ocv_hi < 1.0,
          "analyze ocv_window must satisfy 0 < lo < hi < 1");
  for (double f : analyze.frequencies) require(f > 0.0, "analyze frequencies must be positive");
  require(compare.seeds >= 1, "compare.seeds must be at least 1");
  require(compare.threads >= 0, "compare.threads must be non-negative");
  require(!compare.multisine.empty(), "compare.multisine_hz must not be empty");
  require(compare.duration > 0.0 && compare.amplitude > 0.0, "compare duration and amplitude must be positive");
}

ScenarioConfig parse_config(const std::string& text, const std::string& source) {
  const Reader reader(source);
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  ScenarioConfig cfg;
  try {
    cfg = from_yaml(root, reader);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  cfg.validate();
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), path.string());
}

std::string serialize_config(const ScenarioConfig& cfg) {
  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "seed" << YAML::Value << cfg.seed;
  e << YAML::Key << "output_dir" << YAML::Value << YAML::DoubleQuoted << cfg.output_dir;

  e << YAML::Key << "cell" << YAML::Value << YAML::BeginMap;
  if (!cfg.cell_preset.empty()) e << YAML::Key << "preset" << YAML::Value << cfg.cell_preset;
  e << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << cfg.cell.name;
  e << YAML::Key << "capacity_ah" << YAML::Value << num(cfg.cell.q_b);
  e << YAML::Key << "coulombic_efficiency" << YAML::Value << num(cfg.cell.eta);
  e << YAML::Key << "r_s_ohm" << YAML::Value << num(cfg.cell.ecm.r_s);
  e << YAML::Key << "r_t_ohm" << YAML::Value << num(cfg.cell.ecm.r_t);
  e << YAML::Key << "tau_s" << YAML::Value << num(cfg.cell.ecm.tau);
  e << YAML::Key << "sigma_v" << YAML::Value << num(cfg.cell.sigma_v);
  e << YAML::Key << "ocv" << YAML::Value;
  emit_list(e, {cfg.cell.ocv.k0, cfg.cell.ocv.k1, cfg.cell.ocv.k2, cfg.cell.ocv.k3, cfg.cell.ocv.k4});
  e << YAML::EndMap;

  e << YAML::Key << "initial_state" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "soc" << YAML::Value << num(cfg.initial_state.z);
  e << YAML::Key << "v_c" << YAML::Value << num(cfg.initial_state.v_c);
  e << YAML::EndMap;

  e << YAML::Key << "steps" << YAML::Value << YAML::BeginMap;
  emit_plan(e, "ohmic", cfg.ohmic);
  emit_plan(e, "rc", cfg.rc);
  e << YAML::Key << "gap_after_ohmic_s" << YAML::Value << num(cfg.gap_after_ohmic);
  e << YAML::Key << "gap_after_rc_s" << YAML::Value << num(cfg.gap_after_rc);
  e << YAML::EndMap;

  e << YAML::Key << "drive" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "source" << YAML::Value << (cfg.drive.kind == DriveSource::Kind::csv ? "csv" : "synthetic");
  e << YAML::Key << "duration_s" << YAML::Value << num(cfg.drive.duration);
  e << YAML::Key << "t_s" << YAML::Value << num(cfg.drive.t_s);
  e << YAML::Key << "peak_a" << YAML::Value << num(cfg.drive.peak);
  e << YAML::Key << "profile_seed" << YAML::Value << cfg.drive.profile_seed;
  e << YAML::Key << "path" << YAML::Value << YAML::DoubleQuoted << cfg.drive.path;
  e << YAML::EndMap;

  e << YAML::Key << "data" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "source" << YAML::Value << (cfg.data.kind == DataSource::Kind::csv ? "csv" : "simulate");
  e << YAML::Key << "ohmic" << YAML::Value << YAML::DoubleQuoted << cfg.data.ohmic;
  e << YAML::Key << "rc" << YAML::Value << YAML::DoubleQuoted << cfg.data.rc;
  e << YAML::Key << "drive" << YAML::Value << YAML::DoubleQuoted << cfg.data.drive;
  e << YAML::EndMap;

  e << YAML::Key << "guess" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "r_s" << YAML::Value << num(cfg.guess.r_s);
  e << YAML::Key << "r_t" << YAML::Value << num(cfg.guess.r_t);
  e << YAML::Key << "tau" << YAML::Value << num(cfg.guess.tau);
  e << YAML::Key << "q_b" << YAML::Value << num(cfg.guess.q_b);
  e << YAML::Key << "soc" << YAML::Value << num(cfg.guess.soc);
  e << YAML::Key << "v_c" << YAML::Value << num(cfg.guess.v_c);
  e << YAML::EndMap;

  const auto& t = cfg.tuning;
  e << YAML::Key << "tuning" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "sigma_v" << YAML::Value << num(t.sigma_v);
  e << YAML::Key << "param_walk_rel" << YAML::Value << num(t.param_walk_rel);
  e << YAML::Key << "q_b_walk" << YAML::Value << num(t.q_b_walk);
  e << YAML::Key << "v_c_walk" << YAML::Value << num(t.v_c_walk);
  e << YAML::Key << "soc_walk" << YAML::Value << num(t.soc_walk);
  e << YAML::Key << "initial_std" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "r_s" << YAML::Value << num(t.r_s_std);
  e << YAML::Key << "r_t" << YAML::Value << num(t.r_t_std);
  e << YAML::Key << "tau" << YAML::Value << num(t.tau_std);
  e << YAML::Key << "q_b" << YAML::Value << num(t.q_b_std);
  e << YAML::Key << "v_c" << YAML::Value << num(t.v_c_std);
  e << YAML::Key << "soc" << YAML::Value << num(t.soc_std);
  e << YAML::EndMap;
  e << YAML::Key << "sensitivity_depth" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "rc" << YAML::Value << sensitivity_name(t.rc_sensitivity);
  e << YAML::Key << "soc" << YAML::Value << sensitivity_name(t.soc_sensitivity);
  e << YAML::EndMap;
  e << YAML::Key << "min_excitation" << YAML::Value << num(t.min_excitation);
  e << YAML::Key << "divergence_sigma" << YAML::Value << num(t.divergence_sigma);
  e << YAML::Key << "divergence_steps" << YAML::Value << t.divergence_steps;
  e << YAML::Key << "macro_ratio" << YAML::Value << t.macro_ratio;
  e << YAML::EndMap;

  e << YAML::Key << "report" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "band_r_s" << YAML::Value << num(cfg.bands.r_s);
  e << YAML::Key << "band_r_t" << YAML::Value << num(cfg.bands.r_t);
  e << YAML::Key << "band_tau" << YAML::Value << num(cfg.bands.tau);
  e << YAML::Key << "band_q_b" << YAML::Value << num(cfg.bands.q_b);
  e << YAML::Key << "band_soc" << YAML::Value << num(cfg.bands.soc);
  e << YAML::Key << "hold_s" << YAML::Value << num(cfg.bands.hold_s);
  e << YAML::Key << "tail_window_s" << YAML::Value << num(cfg.bands.tail_window_s);
  e << YAML::EndMap;

  e << YAML::Key << "analyze" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "frequencies_hz" << YAML::Value;
  emit_list(e, cfg.analyze.frequencies);
  e << YAML::Key << "t_c_s" << YAML::Value << num(cfg.analyze.t_c);
  e << YAML::Key << "amplitude_a" << YAML::Value << num(cfg.analyze.amplitude);
  e << YAML::Key << "z0" << YAML::Value << num(cfg.analyze.z0);
  e << YAML::Key << "ocv_window" << YAML::Value;
  emit_list(e, {cfg.analyze.ocv_lo, cfg.analyze.ocv_hi});
  e << YAML::EndMap;

  e << YAML::Key << "compare" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "seeds" << YAML::Value << cfg.compare.seeds;
  e << YAML::Key << "threads" << YAML::Value << cfg.compare.threads;
  e << YAML::Key << "multisine_hz" << YAML::Value;
  emit_list(e, cfg.compare.multisine);
  e << YAML::Key << "amplitude_a" << YAML::Value << num(cfg.compare.amplitude);
  e << YAML::Key << "duration_s" << YAML::Value << num(cfg.compare.duration);
  e << YAML::Key << "rc_tolerance" << YAML::Value << num(cfg.compare.rc_tolerance);
  e << YAML::EndMap;

  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

std::filesystem::path resolve_path(const std::filesystem::path& base_dir, const std::string& path) {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir / p;
}

EstimationPlan make_plan(const ScenarioConfig& cfg) {
  EstimationPlan plan;
  plan.ohmic = cfg.ohmic;
  plan.rc = cfg.rc;
  plan.guess = cfg.guess;
  plan.tuning = cfg.tuning;
  plan.ocv = cfg.cell.ocv;
  plan.eta = cfg.cell.eta;
  return plan;
}

SequentialScenario make_sequential_scenario(const ScenarioConfig& cfg, const std::filesystem::path& base_dir) {
  SequentialScenario sc;
  sc.truth = cfg.cell;
  sc.initial_state = cfg.initial_state;
  sc.plan = make_plan(cfg);
  sc.gap_after_ohmic = cfg.gap_after_ohmic;
  sc.gap_after_rc = cfg.gap_after_rc;
  if (cfg.drive.kind == DriveSource::Kind::csv) {
    sc.drive = csv::ingest_profile(resolve_path(base_dir, cfg.drive.path));
  } else {
    sc.drive = drive_cycle_profile(cfg.drive.t_s, cfg.drive.duration, cfg.drive.peak, cfg.drive.profile_seed);
  }
  return sc;
}

ConcurrentScenario make_concurrent_scenario(const ScenarioConfig& cfg) {
  ConcurrentScenario sc;
  sc.truth = cfg.cell;
  sc.initial_state = cfg.initial_state;
  std::vector<CurrentProfile> parts;
  for (double f : cfg.compare.multisine) parts.push_back(sine_profile(cfg.compare.amplitude, f, 1.0, cfg.compare.duration));
  sc.drive = sum_profiles(parts);
  sc.guess = cfg.guess;
  sc.tuning = cfg.tuning;
  return sc;
}

} // namespace seqsoc::harness
