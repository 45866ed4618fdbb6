#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "harness/commands.hpp"
#include "harness/config.hpp"
#include "seqsoc/csv.hpp"

using namespace seqsoc;
using namespace seqsoc::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("seqsoc_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  os << text;
}

std::string read_text(const fs::path& p) { return csv::read_file(p); }

struct CliRun {
  int code = -1;
  std::string err;
};

CliRun cli(const std::string& args, const fs::path& dir) {
  const auto err_path = dir / "stderr.txt";
  const std::string cmd = std::string(SEQSOC_CLI_PATH) + " " + args + " > " + (dir / "stdout.txt").string() +
                          " 2> " + err_path.string();
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read_text(err_path);
  return r;
}

std::string config_error(const std::string& text) {
  try {
    parse_config(text, "cfg.yaml");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::size_t data_rows(const fs::path& p) { return csv::parse(read_text(p)).rows; }

} // namespace

TEST(Config, DefaultsRoundTrip) {
  const ScenarioConfig cfg;
  EXPECT_EQ(parse_config(serialize_config(cfg)), cfg);
}

TEST(Config, ModifiedConfigRoundTrips) {
  ScenarioConfig cfg;
  cfg.cell_preset = "samsung-18650-40C";
  cfg.cell = cell_preset("samsung-18650-40C");
  cfg.cell.sigma_v = 0.005;
  cfg.seed = 99;
  cfg.guess.q_b = 2.2;
  cfg.tuning.soc_sensitivity = Sensitivity::one_step;
  cfg.rc.frequencies = {0.003, 0.03};
  cfg.rc.amplitudes = {1.0, 0.5};
  cfg.drive.kind = DriveSource::Kind::csv;
  cfg.drive.path = "cycles/udds.csv";
  cfg.analyze.frequencies = {0.1};
  cfg.compare.seeds = 3;
  cfg.bands.soc = 0.02;
  EXPECT_EQ(parse_config(serialize_config(cfg)), cfg);
}

TEST(Config, ShippedConfigsLoad) {
  for (const char* name : {"samsung-18650-20C.yaml", "samsung-18650-40C.yaml"}) {
    const auto cfg = load_config(fs::path(SEQSOC_SOURCE_DIR) / "configs" / name);
    EXPECT_EQ(parse_config(serialize_config(cfg)), cfg) << name;
  }
  EXPECT_EQ(load_config(fs::path(SEQSOC_SOURCE_DIR) / "configs" / "samsung-18650-40C.yaml").cell.q_b, 2.62);
}

TEST(Config, JsonIsAccepted) {
  const auto cfg = parse_config(R"({"seed": 5, "cell": {"preset": "samsung-18650-40C"}, "guess": {"soc": 0.6}})");
  EXPECT_EQ(cfg.seed, 5u);
  EXPECT_EQ(cfg.cell.q_b, 2.62);
  EXPECT_EQ(cfg.guess.soc, 0.6);
}

TEST(Config, UnknownKeyNamesLine) {
  const auto msg = config_error("seed: 1\nguess:\n  soc: 0.5\n  socc: 0.4\n");
  EXPECT_NE(msg.find("cfg.yaml:4"), std::string::npos) << msg;
  EXPECT_NE(msg.find("socc"), std::string::npos) << msg;
}

TEST(Config, BadTypeNamesLine) {
  const auto msg = config_error("seed: 1\ncell:\n  r_s_ohm: fast\n");
  EXPECT_NE(msg.find("cfg.yaml:3"), std::string::npos) << msg;
}

TEST(Config, UnknownPresetIsRejected) {
  EXPECT_NE(config_error("cell:\n  preset: lead-acid\n").find("lead-acid"), std::string::npos);
}

TEST(Config, InvalidValuesAreRejected) {
  EXPECT_FALSE(config_error("cell:\n  capacity_ah: -1\n").empty());
  EXPECT_FALSE(config_error("steps:\n  ohmic:\n    frequencies_hz: [7.0]\n").empty());
  EXPECT_FALSE(config_error("tuning:\n  sensitivity_depth:\n    soc: deep\n").empty());
  EXPECT_FALSE(config_error("drive:\n  source: csv\n").empty());
}

TEST(Commands, SimulateWritesExpectedRowCounts) {
  const auto dir = scratch("rows");
  CommandOptions opt;
  opt.out = dir;
  cmd_simulate(ScenarioConfig{}, opt);
  EXPECT_EQ(data_rows(dir / "ohmic.csv"), 2000u);
  EXPECT_EQ(data_rows(dir / "rc.csv"), 900u);
  EXPECT_EQ(data_rows(dir / "drive.csv"), 3600u);
  EXPECT_EQ(data_rows(dir / "full_run.csv"), 2000u + 87u + 900u + 13u + 3600u);
}

TEST(Commands, NoiselessVoltageEqualsModel) {
  const auto dir = scratch("noiseless");
  ScenarioConfig cfg;
  cfg.cell.sigma_v = 0.0;
  CommandOptions opt;
  opt.out = dir;
  cmd_simulate(cfg, opt);
  const auto m = csv::ingest_measurements(dir / "drive.csv");
  ASSERT_TRUE(m.has_truth());
  for (std::size_t k = 0; k < m.size(); ++k) {
    ASSERT_EQ(m.voltage[k], terminal_voltage(cfg.cell, m.truth[k], m.current[k])) << "row " << k;
  }
}

TEST(Commands, EstimateFromSimulatedCsvMatchesInMemoryRun) {
  const auto dir = scratch("csv_source");
  ScenarioConfig cfg;
  CommandOptions opt;
  opt.out = dir / "sim";
  cmd_simulate(cfg, opt);
  const auto direct = cmd_estimate(cfg, CommandOptions{{}, std::nullopt, dir / "direct"});

  cfg.data.kind = DataSource::Kind::csv;
  cfg.data.ohmic = "sim/ohmic.csv";
  cfg.data.rc = "sim/rc.csv";
  cfg.data.drive = "sim/drive.csv";
  const auto from_csv = cmd_estimate(cfg, CommandOptions{dir, std::nullopt, dir / "csv"});
  EXPECT_EQ(direct.summary["final"], from_csv.summary["final"]);
  EXPECT_TRUE(from_csv.summary["report"]["quantities"]["r_s"]["truth"].is_null());
  EXPECT_EQ(from_csv.summary["events"]["covariance_violations"], 0);
}

TEST(Commands, EmptyAnalyzeListWritesNothing) {
  const auto dir = scratch("analyze_empty");
  ScenarioConfig cfg;
  cfg.analyze.frequencies.clear();
  const auto res = cmd_analyze(cfg, CommandOptions{{}, std::nullopt, dir / "out"});
  EXPECT_TRUE(res.written.empty());
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Commands, AnalyzeWritesOneTablePerFrequency) {
  const auto dir = scratch("analyze");
  ScenarioConfig cfg;
  cfg.analyze.frequencies = {0.4, 0.004};
  const auto res = cmd_analyze(cfg, CommandOptions{{}, std::nullopt, dir});
  EXPECT_EQ(res.written.size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "breakdown_0.4Hz.csv"));
  EXPECT_TRUE(fs::exists(dir / "breakdown_0.004Hz.csv"));
  EXPECT_GT(res.summary["frequencies"][0]["ratio_ohmic_over_rc"].get<double>(), 100.0);
}

TEST(Commands, CompareOnExactNoiselessStart) {
  ScenarioConfig cfg;
  cfg.cell.sigma_v = 0.0;
  cfg.compare.seeds = 1;
  cfg.guess = {cfg.cell.ecm.r_s, cfg.cell.ecm.r_t, cfg.cell.ecm.tau, cfg.cell.q_b, cfg.initial_state.z, 0.0};
  const auto rows = run_compare(cfg, 1);
  ASSERT_EQ(rows.size(), 1u);
  ASSERT_TRUE(rows[0].sequential && rows[0].concurrent);
  EXPECT_LT(*rows[0].concurrent->soc_tail_mean_error, 1e-9);
  EXPECT_LT(std::abs(*rows[0].concurrent->find("q_b")->rel_error), 1e-9);
  EXPECT_LT(std::abs(*rows[0].sequential->find("r_s")->rel_error), 0.005);
  EXPECT_LT(std::abs(*rows[0].sequential->find("q_b")->rel_error), 0.02);
  EXPECT_LT(*rows[0].sequential->soc_tail_mean_error, 0.01);
}

TEST(Commands, CompareSeedsAreConsecutive) {
  ScenarioConfig cfg;
  cfg.compare.seeds = 3;
  cfg.compare.threads = 2;
  const auto rows = run_compare(cfg, 40);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].seed, 40u + i);
}

TEST(Cli, VerbsSucceedAndAreByteIdenticalOnRerun) {
  const auto dir = scratch("rerun");
  write_text(dir / "cfg.yaml", "seed: 3\ncompare:\n  seeds: 2\nanalyze:\n  frequencies_hz: [0.4]\n");
  for (const char* verb : {"simulate", "estimate", "analyze", "compare"}) {
    for (const char* out : {"a", "b"}) {
      const auto r = cli(std::string(verb) + " --config " + (dir / "cfg.yaml").string() + " --out " +
                             (dir / out).string(),
                         dir);
      ASSERT_EQ(r.code, 0) << verb << ": " << r.err;
    }
  }
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const auto twin = dir / "b" / entry.path().filename();
    ASSERT_TRUE(fs::exists(twin)) << twin;
    EXPECT_EQ(read_text(entry.path()), read_text(twin)) << entry.path().filename();
    ++files;
  }
  EXPECT_EQ(files, 4u + 1u + 3u + 1u + 2u + 2u);
}

TEST(Cli, SeedFlagOverridesConfig) {
  const auto dir = scratch("seed");
  write_text(dir / "cfg.yaml", "seed: 3\n");
  ASSERT_EQ(cli("simulate --config " + (dir / "cfg.yaml").string() + " --seed 3 --out " + (dir / "a").string(), dir).code, 0);
  ASSERT_EQ(cli("simulate --config " + (dir / "cfg.yaml").string() + " --seed 4 --out " + (dir / "b").string(), dir).code, 0);
  EXPECT_NE(read_text(dir / "a" / "drive.csv"), read_text(dir / "b" / "drive.csv"));
}

TEST(Cli, OutputDirResolvesAgainstConfigLocation) {
  const auto dir = scratch("relative");
  write_text(dir / "cfg.yaml", "output_dir: results\nanalyze:\n  frequencies_hz: [0.4]\n");
  ASSERT_EQ(cli("analyze --config " + (dir / "cfg.yaml").string(), dir).code, 0);
  EXPECT_TRUE(fs::exists(dir / "results" / "analyze_summary.json"));
}

TEST(Cli, BadConfigExitsWithValidationCode) {
  const auto dir = scratch("badcfg");
  write_text(dir / "cfg.yaml", "seed: 1\nbogus: 2\n");
  const auto r = cli("estimate --config " + (dir / "cfg.yaml").string(), dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bogus"), std::string::npos) << r.err;
  EXPECT_EQ(cli("estimate --config " + (dir / "missing.yaml").string(), dir).code, 1);
  EXPECT_NE(cli("frobnicate", dir).code, 0);
}

TEST(Cli, MissingVoltageColumnExitsWithValidationCode) {
  const auto dir = scratch("nocol");
  write_text(dir / "m.csv", "t_s,i_A\n0,1\n1,1\n");
  write_text(dir / "cfg.yaml", "data:\n  source: csv\n  ohmic: m.csv\n  rc: m.csv\n  drive: m.csv\n");
  const auto r = cli("estimate --config " + (dir / "cfg.yaml").string() + " --out " + (dir / "out").string(), dir);
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("v_V"), std::string::npos) << r.err;
}

TEST(Cli, ZeroCurrentExitsWithRuntimeCode) {
  const auto dir = scratch("zerocur");
  std::string text = "t_s,i_A,v_V\n";
  for (int k = 0; k < 300; ++k) text += std::to_string(k) + ",0,3.6\n";
  write_text(dir / "m.csv", text);
  write_text(dir / "cfg.yaml", "data:\n  source: csv\n  ohmic: m.csv\n  rc: m.csv\n  drive: m.csv\n");
  const auto r = cli("estimate --config " + (dir / "cfg.yaml").string() + " --out " + (dir / "out").string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("step1"), std::string::npos) << r.err;
}

TEST(Cli, DivergenceExitsWithRuntimeCode) {
  const auto dir = scratch("diverge");
  ScenarioConfig cfg;
  cfg.cell.sigma_v = 0.0;
  cmd_simulate(cfg, CommandOptions{{}, std::nullopt, dir});
  auto drive = csv::ingest_measurements(dir / "drive.csv");
  for (auto& v : drive.voltage) v += 2.0;
  csv::write_file_atomic(dir / "drive_shifted.csv", csv::measurement_table(drive).render());
  write_text(dir / "cfg.yaml",
             "data:\n  source: csv\n  ohmic: ohmic.csv\n  rc: rc.csv\n  drive: drive_shifted.csv\n"
             "tuning:\n  sigma_v: 0.001\n  soc_walk: 0\n  v_c_walk: 0\n  q_b_walk: 0\n"
             "  initial_std:\n    soc: 0.000001\n    v_c: 0.000001\n    q_b: 0.000001\n");
  const auto r = cli("estimate --config " + (dir / "cfg.yaml").string() + " --out " + (dir / "out").string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("step3"), std::string::npos) << r.err;
}
