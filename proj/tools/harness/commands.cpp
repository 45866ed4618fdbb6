#include "harness/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <limits>
#include <thread>

#include "seqsoc/csv.hpp"
#include "seqsoc/pipeline.hpp"
#include "seqsoc/signal_lab.hpp"

namespace seqsoc::harness {

namespace {

using json = nlohmann::ordered_json;

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

void write_csv(CommandResult& res, const std::filesystem::path& path, const csv::Table& table) {
  csv::write_file_atomic(path, table.render());
  res.written.push_back(path);
}

void write_json(CommandResult& res, const std::filesystem::path& path, const json& j) {
  csv::write_file_atomic(path, j.dump(2) + "\n");
  res.written.push_back(path);
}

csv::Table ohmic_trace_table(const OhmicTrace& t) {
  csv::Table tab;
  tab.add("t_s", t.time);
  tab.add("r_s_ohm", t.r_s);
  tab.add("var_r_s", t.variance);
  return tab;
}

csv::Table rc_trace_table(const RcTrace& t) {
  csv::Table tab;
  tab.add("t_s", t.time);
  tab.add("r_t_ohm", t.r_t);
  tab.add("tau_s", t.tau);
  tab.add("var_r_t", t.var_r_t);
  tab.add("var_tau", t.var_tau);
  return tab;
}

csv::Table soc_trace_table(const SocTrace& t) {
  csv::Table tab;
  tab.add("t_s", t.time);
  tab.add("v_c_V", t.v_c);
  tab.add("soc", t.soc);
  tab.add("q_b_Ah", t.q_b);
  tab.add("var_v_c", t.var_v_c);
  tab.add("var_soc", t.var_soc);
  tab.add("var_q_b", t.var_q_b);
  tab.add("v_pred_V", t.v_pred);
  tab.add("v_meas_V", t.v_meas);
  if (t.has_truth()) tab.add("soc_true", t.soc_true);
  return tab;
}

MeasurementSequence concatenate(const std::vector<MeasurementSequence>& segments) {
  MeasurementSequence all;
  if (segments.empty()) return all;
  all.t_s = segments.front().t_s;
  for (const auto& s : segments) {
    all.time.insert(all.time.end(), s.time.begin(), s.time.end());
    all.current.insert(all.current.end(), s.current.begin(), s.current.end());
    all.voltage.insert(all.voltage.end(), s.voltage.begin(), s.voltage.end());
    all.truth.insert(all.truth.end(), s.truth.begin(), s.truth.end());
  }
  return all;
}

std::string frequency_tag(double f) { return csv::format_number(f); }

double nan_if_missing(const std::optional<double>& v) {
  return v.value_or(std::numeric_limits<double>::quiet_NaN());
}

double report_value(const std::optional<MetricsReport>& r, const char* quantity,
                    std::optional<double> QuantityError::*field) {
  if (!r) return std::numeric_limits<double>::quiet_NaN();
  const auto* q = r->find(quantity);
  return q ? nan_if_missing(q->*field) : std::numeric_limits<double>::quiet_NaN();
}

double median(std::vector<double> xs) {
  xs.erase(std::remove_if(xs.begin(), xs.end(), [](double x) { return std::isnan(x); }), xs.end());
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

} // namespace

json to_json(const MetricsReport& report) {
  json j;
  json quantities = json::object();
  for (const auto& q : report.quantities) {
    json e;
    e["estimate"] = q.estimate;
    e["truth"] = opt_json(q.truth);
    e["abs_error"] = opt_json(q.abs_error);
    e["rel_error"] = opt_json(q.rel_error);
    e["band"] = q.band;
    e["band_is_relative"] = q.band_is_relative;
    const auto final_error = q.band_is_relative ? q.rel_error : q.abs_error;
    e["converged"] = q.convergence_s.has_value();
    e["final_within_band"] = final_error ? json(std::abs(*final_error) <= q.band) : json(nullptr);
    e["convergence_time_s"] = opt_json(q.convergence_s);
    quantities[q.name] = e;
  }
  j["quantities"] = quantities;
  j["run_duration_s"] = report.run_duration_s;
  j["voltage_rmse_V"] = report.voltage_rmse;
  j["soc_max_error_after_convergence"] = opt_json(report.soc_max_error_after_convergence);
  j["soc_tail_mean_abs_error"] = opt_json(report.soc_tail_mean_error);
  j["tail_window_s"] = report.tail_window_s;
  j["innovation"] = {{"count", report.innovation.count},
                     {"mean_V", report.innovation.mean},
                     {"std_V", report.innovation.std},
                     {"variance_ratio", report.innovation.variance_ratio},
                     {"lag1_autocorrelation", report.innovation.lag1_autocorrelation}};
  return j;
}

CommandResult cmd_simulate(const ScenarioConfig& cfg, const CommandOptions& opt) {
  const auto seed = opt.seed_or(cfg);
  const auto out = opt.out_or(cfg);
  const auto sc = make_sequential_scenario(cfg, opt.base_dir);
  const auto rec = simulate_scenario(sc, seed);

  CommandResult res;
  write_csv(res, out / "ohmic.csv", csv::measurement_table(rec.steps.ohmic));
  write_csv(res, out / "rc.csv", csv::measurement_table(rec.steps.rc));
  write_csv(res, out / "drive.csv", csv::measurement_table(rec.steps.drive));
  const auto all = concatenate(rec.segments);
  write_csv(res, out / "full_run.csv", csv::measurement_table(all));

  json j;
  j["command"] = "simulate";
  j["seed"] = seed;
  j["cell"] = cfg.cell.name;
  j["segments"] = json::array();
  for (const auto& s : rec.segments) {
    j["segments"].push_back({{"start_s", s.time.front()}, {"samples", s.size()}, {"t_s", s.t_s}});
  }
  j["final_soc"] = all.truth.back().z;
  const auto& sat = rec.steps.drive.first_saturation;
  j["drive_first_saturation_sample"] = sat ? json(*sat) : json(nullptr);
  res.summary = j;
  write_json(res, out / "simulate_summary.json", j);
  return res;
}

CommandResult cmd_estimate(const ScenarioConfig& cfg, const CommandOptions& opt) {
  const auto seed = opt.seed_or(cfg);
  const auto out = opt.out_or(cfg);

  SequentialData data;
  std::optional<CellSpec> truth;
  if (cfg.data.kind == DataSource::Kind::csv) {
    data.ohmic = csv::ingest_measurements(resolve_path(opt.base_dir, cfg.data.ohmic));
    data.rc = csv::ingest_measurements(resolve_path(opt.base_dir, cfg.data.rc));
    data.drive = csv::ingest_measurements(resolve_path(opt.base_dir, cfg.data.drive));
  } else {
    data = simulate_scenario(make_sequential_scenario(cfg, opt.base_dir), seed).steps;
    truth = cfg.cell;
  }

  const auto result = estimate_sequential(data, make_plan(cfg));
  const auto report = sequential_report(result, truth, cfg.tuning.sigma_v, cfg.bands);

  CommandResult res;
  write_csv(res, out / "step1_ohmic.csv", ohmic_trace_table(result.ohmic));
  write_csv(res, out / "step2_rc.csv", rc_trace_table(result.rc));
  write_csv(res, out / "step3_soc.csv", soc_trace_table(result.soc));

  json j;
  j["command"] = "estimate";
  j["seed"] = seed;
  j["data_source"] = cfg.data.kind == DataSource::Kind::csv ? "csv" : "simulate";
  j["cell"] = cfg.cell.name;
  j["final"] = {{"r_s_ohm", result.r_s_hat},
                {"r_t_ohm", result.r_t_hat},
                {"tau_s", result.tau_hat},
                {"q_b_Ah", result.soc.final_q_b},
                {"soc", result.soc.final_soc}};
  j["provenance"] = {{"rc_stage_r_s_ohm", result.provenance.rc_stage_r_s},
                     {"soc_stage_r_s_ohm", result.provenance.soc_stage_params.r_s},
                     {"soc_stage_r_t_ohm", result.provenance.soc_stage_params.r_t},
                     {"soc_stage_tau_s", result.provenance.soc_stage_params.tau}};
  j["events"] = {{"rc_projection_events", result.rc.projection_events},
                 {"soc_clamp_events", result.soc.clamp_events},
                 {"covariance_violations", result.ohmic.covariance_violations + result.rc.covariance_violations +
                                               result.soc.covariance_violations}};
  j["report"] = to_json(report);
  res.summary = j;
  write_json(res, out / "summary.json", j);
  return res;
}

CommandResult cmd_analyze(const ScenarioConfig& cfg, const CommandOptions& opt) {
  CommandResult res;
  if (cfg.analyze.frequencies.empty()) return res;
  const auto out = opt.out_or(cfg);
  const auto lin = linearize_ocv(cfg.cell.ocv, cfg.analyze.ocv_lo, cfg.analyze.ocv_hi);

  json j;
  j["command"] = "analyze";
  j["cell"] = cfg.cell.name;
  j["ocv_slope_V"] = lin.slope;
  j["ocv_intercept_V"] = lin.intercept;
  j["t_c_s"] = cfg.analyze.t_c;
  j["frequencies"] = json::array();
  for (double f : cfg.analyze.frequencies) {
    BreakdownRequest req;
    req.a = lin.slope;
    req.b = lin.intercept;
    req.z0 = cfg.analyze.z0;
    req.f = f;
    req.m = cfg.analyze.amplitude;
    req.t_c = cfg.analyze.t_c;
    const auto b = component_breakdown(cfg.cell, req);
    write_csv(res, out / ("breakdown_" + frequency_tag(f) + "Hz.csv"), csv::breakdown_table(b));
    const auto& a = b.amplitude;
    const double current_max = std::max({a.socvar, a.ohmic, a.rc});
    const double current_min = std::min({a.socvar, a.ohmic, a.rc});
    j["frequencies"].push_back({{"f_hz", f},
                                {"t_s", b.t_s},
                                {"samples", b.time.size()},
                                {"amplitude_V",
                                 {{"init", a.init}, {"socvar", a.socvar}, {"ohmic", a.ohmic}, {"rc", a.rc}}},
                                {"ratio_ohmic_over_rc", a.ohmic / a.rc},
                                {"ratio_ohmic_over_socvar", a.ohmic / a.socvar},
                                {"ratio_rc_over_ohmic", a.rc / a.ohmic},
                                {"ratio_max_over_min", current_max / current_min}});
  }
  res.summary = j;
  write_json(res, out / "analyze_summary.json", j);
  return res;
}

std::vector<CompareRow> run_compare(const ScenarioConfig& cfg, std::uint64_t base_seed) {
  const auto seq_sc = make_sequential_scenario(cfg, {});
  const auto conc_sc = make_concurrent_scenario(cfg);
  std::vector<CompareRow> rows(static_cast<std::size_t>(cfg.compare.seeds));
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      auto& row = rows[i];
      row.seed = base_seed + i;
      try {
        const auto r = run_sequential(seq_sc, row.seed);
        row.sequential = sequential_report(r, cfg.cell, cfg.tuning.sigma_v, cfg.bands);
      } catch (const PipelineError& e) {
        row.sequential_error = e.what();
      }
      try {
        const auto r = run_concurrent_baseline(conc_sc, row.seed);
        row.concurrent = concurrent_report(r, cfg.cell, cfg.tuning.sigma_v, cfg.bands);
      } catch (const PipelineError& e) {
        row.concurrent_error = e.what();
      }
    }
  };

  unsigned threads = cfg.compare.threads > 0 ? static_cast<unsigned>(cfg.compare.threads)
                                             : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(rows.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

CommandResult cmd_compare(const ScenarioConfig& cfg, const CommandOptions& opt) {
  const auto seed = opt.seed_or(cfg);
  const auto out = opt.out_or(cfg);
  const auto rows = run_compare(cfg, seed);
  const double tol = cfg.compare.rc_tolerance;

  auto soc_tail = [](const std::optional<MetricsReport>& r) {
    return r ? nan_if_missing(r->soc_tail_mean_error) : std::numeric_limits<double>::quiet_NaN();
  };
  auto flag = [tol](const std::optional<MetricsReport>& r) { return r && rc_converged(*r, tol) ? 1.0 : 0.0; };

  std::vector<double> seeds, seq_tail, conc_tail, seq_conv, conc_conv, seq_q, conc_q, seq_rt, seq_tau, conc_rt,
      conc_tau, seq_flag, conc_flag, seq_ok, conc_ok;
  for (const auto& r : rows) {
    seeds.push_back(static_cast<double>(r.seed));
    seq_tail.push_back(soc_tail(r.sequential));
    conc_tail.push_back(soc_tail(r.concurrent));
    seq_conv.push_back(report_value(r.sequential, "soc", &QuantityError::convergence_s));
    conc_conv.push_back(report_value(r.concurrent, "soc", &QuantityError::convergence_s));
    seq_q.push_back(report_value(r.sequential, "q_b", &QuantityError::rel_error));
    conc_q.push_back(report_value(r.concurrent, "q_b", &QuantityError::rel_error));
    seq_rt.push_back(report_value(r.sequential, "r_t", &QuantityError::rel_error));
    seq_tau.push_back(report_value(r.sequential, "tau", &QuantityError::rel_error));
    conc_rt.push_back(report_value(r.concurrent, "r_t", &QuantityError::rel_error));
    conc_tau.push_back(report_value(r.concurrent, "tau", &QuantityError::rel_error));
    seq_flag.push_back(flag(r.sequential));
    conc_flag.push_back(flag(r.concurrent));
    seq_ok.push_back(r.sequential ? 1.0 : 0.0);
    conc_ok.push_back(r.concurrent ? 1.0 : 0.0);
  }

  csv::Table tab;
  tab.add("seed", seeds);
  tab.add("seq_soc_tail_abs", seq_tail);
  tab.add("conc_soc_tail_abs", conc_tail);
  tab.add("seq_soc_conv_s", seq_conv);
  tab.add("conc_soc_conv_s", conc_conv);
  tab.add("seq_q_b_rel", seq_q);
  tab.add("conc_q_b_rel", conc_q);
  tab.add("seq_r_t_rel", seq_rt);
  tab.add("seq_tau_rel", seq_tau);
  tab.add("conc_r_t_rel", conc_rt);
  tab.add("conc_tau_rel", conc_tau);
  tab.add("seq_rc_converged", seq_flag);
  tab.add("conc_rc_converged", conc_flag);
  tab.add("seq_completed", seq_ok);
  tab.add("conc_completed", conc_ok);

  CommandResult res;
  write_csv(res, out / "compare_seeds.csv", tab);

  auto count = [](const std::vector<double>& xs) {
    return static_cast<std::size_t>(std::count(xs.begin(), xs.end(), 1.0));
  };
  auto abs_all = [](std::vector<double> xs) {
    for (auto& x : xs) x = std::abs(x);
    return xs;
  };
  json j;
  j["command"] = "compare";
  j["base_seed"] = seed;
  j["seeds"] = rows.size();
  j["rc_tolerance"] = tol;
  auto arm = [&](const std::vector<double>& tail, const std::vector<double>& conv, const std::vector<double>& q,
                 const std::vector<double>& rt, const std::vector<double>& tau, const std::vector<double>& flags,
                 const std::vector<double>& ok) {
    json a;
    a["completed_runs"] = count(ok);
    a["median_soc_tail_abs_error"] = median(tail);
    a["median_soc_convergence_s"] = median(conv);
    a["median_abs_q_b_rel_error"] = median(abs_all(q));
    a["median_abs_r_t_rel_error"] = median(abs_all(rt));
    a["median_abs_tau_rel_error"] = median(abs_all(tau));
    a["rc_converged_runs"] = count(flags);
    return a;
  };
  j["sequential"] = arm(seq_tail, seq_conv, seq_q, seq_rt, seq_tau, seq_flag, seq_ok);
  j["concurrent"] = arm(conc_tail, conc_conv, conc_q, conc_rt, conc_tau, conc_flag, conc_ok);
  j["errors"] = json::array();
  for (const auto& r : rows) {
    if (!r.sequential_error.empty()) j["errors"].push_back({{"seed", r.seed}, {"arm", "sequential"}, {"what", r.sequential_error}});
    if (!r.concurrent_error.empty()) j["errors"].push_back({{"seed", r.seed}, {"arm", "concurrent"}, {"what", r.concurrent_error}});
  }
  res.summary = j;
  write_json(res, out / "compare_summary.json", j);
  return res;
}

namespace {

void print_table(const json& summary) {
  if (!summary.contains("sequential")) return;
  const auto& s = summary["sequential"];
  const auto& c = summary["concurrent"];
  auto row = [&](const char* label, const char* key) {
    auto cell = [](const json& v) {
      if (v.is_null()) return std::string("n/a");
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.4g", v.get<double>());
      return std::string(buf);
    };
    std::printf("%-30s %14s %14s\n", label, cell(s[key]).c_str(), cell(c[key]).c_str());
  };
  std::printf("%-30s %14s %14s\n", "metric (median over seeds)", "sequential", "concurrent");
  row("SoC tail |error|", "median_soc_tail_abs_error");
  row("SoC convergence time [s]", "median_soc_convergence_s");
  row("|Q_b| relative error", "median_abs_q_b_rel_error");
  row("|R_t| relative error", "median_abs_r_t_rel_error");
  row("|tau| relative error", "median_abs_tau_rel_error");
  std::printf("%-30s %14s %14s\n", "R_t/tau converged runs",
              (std::to_string(s["rc_converged_runs"].get<std::size_t>()) + "/" +
               std::to_string(summary["seeds"].get<std::size_t>()))
                  .c_str(),
              (std::to_string(c["rc_converged_runs"].get<std::size_t>()) + "/" +
               std::to_string(summary["seeds"].get<std::size_t>()))
                  .c_str());
}

} // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Sequential SoC/SoH estimation harness"};
  app.require_subcommand(1);

  struct VerbArgs {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
  };
  VerbArgs args;
  auto add_verb = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", args.config, "Scenario config (YAML or JSON)")->required();
    sub->add_option("--seed", args.seed, "Top-level seed; overrides the config");
    sub->add_option("--out", args.out, "Output directory; overrides the config");
    return sub;
  };
  auto* simulate = add_verb("simulate", "Simulate the three-step measurement campaign");
  auto* estimate = add_verb("estimate", "Run the sequential estimator and report metrics");
  auto* analyze = add_verb("analyze", "Voltage component breakdown per injection frequency");
  auto* compare = add_verb("compare", "Sequential vs concurrent estimation over many seeds");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kSuccess : kValidationError;
  }

  try {
    const std::filesystem::path config_path(args.config);
    const auto cfg = load_config(config_path);
    CommandOptions opt;
    opt.base_dir = config_path.parent_path();
    opt.seed = args.seed;
    if (args.out) opt.out = std::filesystem::path(*args.out);

    CommandResult res;
    if (simulate->parsed()) res = cmd_simulate(cfg, opt);
    if (estimate->parsed()) res = cmd_estimate(cfg, opt);
    if (analyze->parsed()) res = cmd_analyze(cfg, opt);
    if (compare->parsed()) {
      res = cmd_compare(cfg, opt);
      print_table(res.summary);
    }
    for (const auto& p : res.written) std::cout << "wrote " << p.string() << "\n";
    return kSuccess;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kValidationError;
  } catch (const csv::CsvError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kValidationError;
  } catch (const PipelineError& e) {
    std::cerr << "estimation error [" << e.step() << "]: " << e.what() << "\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

} // namespace seqsoc::harness
