#pragma once

// Run metrics derived from estimation traces.

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "seqsoc/cell_model.hpp"
#include "seqsoc/metrics.hpp"
#include "seqsoc/pipeline.hpp"

namespace seqsoc {

struct QuantityError {
  std::string name;
  double estimate = 0.0;
  std::optional<double> truth;
  std::optional<double> abs_error;
  std::optional<double> rel_error;
  std::optional<double> convergence_s; // nullopt with truth means "not converged"
  double band = 0.0;                   // convergence band, same units as abs_error (relative for parameters)
  bool band_is_relative = true;
};

/// Innovation statistics over a trace. `variance_ratio` compares the sample
/// variance with the measurement noise variance; near 1 for a consistent filter.
struct InnovationStats {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;
  double variance_ratio = 0.0;
  double lag1_autocorrelation = 0.0;
};

struct MetricsReport {
  std::vector<QuantityError> quantities;
  double run_duration_s = 0.0;
  double voltage_rmse = 0.0; // predicted (prior) vs measured terminal voltage, V
  InnovationStats innovation;
  std::optional<double> soc_max_error_after_convergence;
  std::optional<double> soc_tail_mean_error; // mean |error| over the final tail window
  double tail_window_s = 600.0;

  const QuantityError* find(const std::string& name) const {
    for (const auto& q : quantities) {
      if (q.name == name) return &q;
    }
    return nullptr;
  }
};

/// Convergence bands: relative for parameters, absolute for SoC.
struct ReportBands {
  double r_s = 0.05;
  double r_t = 0.15;
  double tau = 0.15;
  double q_b = 0.02;
  double soc = 0.01;
  double hold_s = 120.0;
  double tail_window_s = 600.0;

  bool operator==(const ReportBands&) const = default;
};

inline InnovationStats innovation_stats(const std::vector<double>& innovation, double sigma_v) {
  InnovationStats s;
  s.count = innovation.size();
  if (innovation.empty()) return s;
  const double n = static_cast<double>(innovation.size());
  for (double e : innovation) s.mean += e;
  s.mean /= n;
  double var = 0.0;
  double lag = 0.0;
  for (std::size_t k = 0; k < innovation.size(); ++k) {
    const double d = innovation[k] - s.mean;
    var += d * d;
    if (k > 0) lag += d * (innovation[k - 1] - s.mean);
  }
  s.std = std::sqrt(var / n);
  s.variance_ratio = sigma_v > 0.0 ? (var / n) / (sigma_v * sigma_v) : 0.0;
  s.lag1_autocorrelation = var > 0.0 ? lag / var : 0.0;
  return s;
}

namespace detail {
inline QuantityError parameter_quantity(std::string name, const std::vector<double>& time,
                                        const std::vector<double>& trace, std::optional<double> truth,
                                        double band, double hold) {
  QuantityError q;
  q.name = std::move(name);
  q.estimate = trace.empty() ? 0.0 : trace.back();
  q.band = band;
  q.band_is_relative = true;
  if (truth) {
    q.truth = truth;
    q.abs_error = std::abs(q.estimate - *truth);
    q.rel_error = relative_error(q.estimate, *truth);
    std::vector<double> rel(trace.size());
    for (std::size_t k = 0; k < trace.size(); ++k) rel[k] = relative_error(trace[k], *truth);
    q.convergence_s = convergence_time(time, rel, band, hold);
  }
  return q;
}

inline void add_soc_metrics(MetricsReport& r, const SocTrace& soc, const ReportBands& bands) {
  QuantityError q;
  q.name = "soc";
  q.estimate = soc.final_soc;
  q.band = bands.soc;
  q.band_is_relative = false;
  if (soc.has_truth()) {
    const auto err = soc.soc_error();
    q.truth = soc.soc_true.back();
    q.abs_error = std::abs(err.back());
    q.rel_error = relative_error(q.estimate, *q.truth);
    q.convergence_s = convergence_time(soc.time, err, bands.soc, bands.hold_s);
    if (q.convergence_s) r.soc_max_error_after_convergence = max_abs_after(soc.time, err, *q.convergence_s);
    r.soc_tail_mean_error = tail_mean_abs(soc.time, err, bands.tail_window_s);
  }
  r.quantities.push_back(q);
}
} // namespace detail

/// Report for a sequential run. `truth` supplies parameter ground truth when
/// the data was simulated; SoC truth travels with the measurements.
inline MetricsReport sequential_report(const SequentialResult& res, const std::optional<CellSpec>& truth,
                                       double sigma_v, const ReportBands& bands = {}) {
  MetricsReport r;
  r.tail_window_s = bands.tail_window_s;
  auto opt = [&](auto f) -> std::optional<double> {
    if (!truth) return std::nullopt;
    return f(*truth);
  };
  r.quantities.push_back(detail::parameter_quantity("r_s", res.ohmic.time, res.ohmic.r_s,
                                                    opt([](const CellSpec& c) { return c.ecm.r_s; }), bands.r_s,
                                                    bands.hold_s));
  r.quantities.push_back(detail::parameter_quantity("r_t", res.rc.time, res.rc.r_t,
                                                    opt([](const CellSpec& c) { return c.ecm.r_t; }), bands.r_t,
                                                    bands.hold_s));
  r.quantities.push_back(detail::parameter_quantity("tau", res.rc.time, res.rc.tau,
                                                    opt([](const CellSpec& c) { return c.ecm.tau; }), bands.tau,
                                                    bands.hold_s));
  r.quantities.push_back(detail::parameter_quantity("q_b", res.soc.time, res.soc.q_b,
                                                    opt([](const CellSpec& c) { return c.q_b; }), bands.q_b,
                                                    bands.hold_s));
  detail::add_soc_metrics(r, res.soc, bands);
  if (!res.soc.time.empty()) r.run_duration_s = res.soc.time.back() - res.ohmic.time.front();
  r.voltage_rmse = rmse(res.soc.v_pred, res.soc.v_meas);
  r.innovation = innovation_stats(res.soc.innovation, sigma_v);
  return r;
}

inline MetricsReport concurrent_report(const ConcurrentResult& res, const std::optional<CellSpec>& truth,
                                       double sigma_v, const ReportBands& bands = {}) {
  MetricsReport r;
  r.tail_window_s = bands.tail_window_s;
  const auto& t = res.soc.time;
  r.quantities.push_back(detail::parameter_quantity("r_s", t, res.r_s,
                                                    truth ? std::optional(truth->ecm.r_s) : std::nullopt, bands.r_s,
                                                    bands.hold_s));
  r.quantities.push_back(detail::parameter_quantity("r_t", t, res.r_t,
                                                    truth ? std::optional(truth->ecm.r_t) : std::nullopt, bands.r_t,
                                                    bands.hold_s));
  r.quantities.push_back(detail::parameter_quantity("tau", t, res.tau,
                                                    truth ? std::optional(truth->ecm.tau) : std::nullopt, bands.tau,
                                                    bands.hold_s));
  r.quantities.push_back(detail::parameter_quantity("q_b", t, res.soc.q_b,
                                                    truth ? std::optional(truth->q_b) : std::nullopt, bands.q_b,
                                                    bands.hold_s));
  detail::add_soc_metrics(r, res.soc, bands);
  if (!t.empty()) r.run_duration_s = t.back() - t.front();
  r.voltage_rmse = rmse(res.soc.v_pred, res.soc.v_meas);
  r.innovation = innovation_stats(res.soc.innovation, sigma_v);
  return r;
}

/// R_t and tau both end within `tolerance` relative error of truth.
inline bool rc_converged(const MetricsReport& r, double tolerance = 0.15) {
  const auto* rt = r.find("r_t");
  const auto* tau = r.find("tau");
  if (!rt || !tau || !rt->rel_error || !tau->rel_error) return false;
  return std::abs(*rt->rel_error) <= tolerance && std::abs(*tau->rel_error) <= tolerance;
}

} // namespace seqsoc
