#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "harness/config.hpp"
#include "seqsoc/report.hpp"

namespace seqsoc::harness {

/// Exit codes shared by every verb.
enum ExitCode : int { kSuccess = 0, kValidationError = 1, kRuntimeError = 2 };

struct CommandOptions {
  std::filesystem::path base_dir; // relative CSV paths in the config resolve against this
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;

  std::uint64_t seed_or(const ScenarioConfig& cfg) const { return seed.value_or(cfg.seed); }
  std::filesystem::path out_or(const ScenarioConfig& cfg) const {
    return out.value_or(resolve_path(base_dir, cfg.output_dir));
  }
};

struct CommandResult {
  std::vector<std::filesystem::path> written;
  nlohmann::ordered_json summary;
};

nlohmann::ordered_json to_json(const MetricsReport& report);

CommandResult cmd_simulate(const ScenarioConfig& cfg, const CommandOptions& opt);
CommandResult cmd_estimate(const ScenarioConfig& cfg, const CommandOptions& opt);
CommandResult cmd_analyze(const ScenarioConfig& cfg, const CommandOptions& opt);

/// One matched seed of the sequential-vs-concurrent comparison.
struct CompareRow {
  std::uint64_t seed = 0;
  std::optional<MetricsReport> sequential; // nullopt when the arm aborted
  std::optional<MetricsReport> concurrent;
  std::string sequential_error;
  std::string concurrent_error;
};

std::vector<CompareRow> run_compare(const ScenarioConfig& cfg, std::uint64_t base_seed);
CommandResult cmd_compare(const ScenarioConfig& cfg, const CommandOptions& opt);

/// Parses argv, dispatches, and maps failures to exit codes.
int run_cli(int argc, char** argv);

} // namespace seqsoc::harness
