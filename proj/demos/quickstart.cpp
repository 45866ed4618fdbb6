// Simulates the default three-step campaign on the 20 degC cell and runs the
// sequential estimator over it.

#include <cstdio>

#include "seqsoc/pipeline.hpp"
#include "seqsoc/report.hpp"

int main() {
  const seqsoc::SequentialScenario scenario;
  const auto result = seqsoc::run_sequential(scenario, 42);
  const auto report = seqsoc::sequential_report(result, scenario.truth, scenario.plan.tuning.sigma_v);

  std::printf("%-6s %12s %12s %10s\n", "", "estimate", "truth", "rel.err");
  for (const auto& q : report.quantities) {
    std::printf("%-6s %12.5f %12.5f %9.2f%%\n", q.name.c_str(), q.estimate, q.truth.value_or(0.0),
                100.0 * q.rel_error.value_or(0.0));
  }
  if (report.soc_tail_mean_error) {
    std::printf("SoC mean |error| over the last %.0f s: %.4f\n", report.tail_window_s, *report.soc_tail_mean_error);
  }
  std::printf("terminal voltage RMSE: %.4f V\n", report.voltage_rmse);
}
