#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqsoc/cell_model.hpp"
#include "seqsoc/pipeline.hpp"
#include "seqsoc/report.hpp"

namespace seqsoc::harness {

/// Invalid configuration. The message carries "source:line:" when the
/// offending node has a position.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct DriveSource {
  enum class Kind { synthetic, csv };
  Kind kind = Kind::synthetic;
  double duration = 3600.0; // s
  double t_s = 1.0;         // s
  double peak = 1.235;      // A
  std::uint64_t profile_seed = 7;
  std::string path; // current profile CSV when kind == csv

  bool operator==(const DriveSource&) const = default;
};

/// Where `estimate` gets its measurements.
struct DataSource {
  enum class Kind { simulate, csv };
  Kind kind = Kind::simulate;
  std::string ohmic; // measurement CSVs when kind == csv
  std::string rc;
  std::string drive;

  bool operator==(const DataSource&) const = default;
};

struct AnalyzeConfig {
  std::vector<double> frequencies{0.4, 0.004, 0.0004}; // Hz
  double t_c = 80.0;                                   // high-pass time constant, s
  double amplitude = 1.0;                              // A
  double z0 = 0.8;
  double ocv_lo = 0.3; // linearization window
  double ocv_hi = 0.9;

  bool operator==(const AnalyzeConfig&) const = default;
};

struct CompareConfig {
  int seeds = 20;
  int threads = 0; // 0 picks hardware concurrency
  std::vector<double> multisine{0.01, 0.05, 0.1}; // Hz
  double amplitude = 1.235;
  double duration = 3600.0;
  double rc_tolerance = 0.15; // relative error bound for the R_t/tau convergence flag

  bool operator==(const CompareConfig&) const = default;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::string cell_preset = "samsung-18650-20C"; // empty for a fully inline cell
  CellSpec cell = CellSpec::samsung_18650_20c();
  BatteryState initial_state{0.0, 0.8};
  InjectionPlan ohmic = InjectionPlan::ohmic_default();
  InjectionPlan rc = InjectionPlan::rc_default();
  double gap_after_ohmic = 87.0;
  double gap_after_rc = 13.0;
  DriveSource drive;
  DataSource data;
  InitialGuess guess;
  EstimatorTuning tuning;
  ReportBands bands;
  AnalyzeConfig analyze;
  CompareConfig compare;

  bool operator==(const ScenarioConfig& o) const;
  void validate() const;
};

/// Named cell presets; throws ConfigError for unknown names.
CellSpec cell_preset(const std::string& name);
std::vector<std::string> cell_preset_names();

/// Parses YAML (or JSON, which YAML accepts). Missing keys keep defaults;
/// unknown keys are rejected.
ScenarioConfig parse_config(const std::string& text, const std::string& source = "<config>");
ScenarioConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ScenarioConfig& cfg);

/// Resolves `path` against the directory holding the config file.
std::filesystem::path resolve_path(const std::filesystem::path& base_dir, const std::string& path);

/// Builds the simulated sequential scenario; a CSV drive is read from disk.
SequentialScenario make_sequential_scenario(const ScenarioConfig& cfg, const std::filesystem::path& base_dir);
ConcurrentScenario make_concurrent_scenario(const ScenarioConfig& cfg);
EstimationPlan make_plan(const ScenarioConfig& cfg);

} // namespace seqsoc::harness
