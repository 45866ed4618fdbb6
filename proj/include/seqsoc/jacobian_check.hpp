#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "seqsoc/estimators.hpp"

namespace seqsoc {

/// Box the validator samples (state, parameters, input) from.
template <int NX, int NP, int NU>
struct ProbeBox {
  Vec<NX> state_lo = Vec<NX>::Constant(-1.0), state_hi = Vec<NX>::Constant(1.0);
  Vec<NP> param_lo = Vec<NP>::Constant(-1.0), param_hi = Vec<NP>::Constant(1.0);
  Vec<NU> input_lo = Vec<NU>::Constant(-1.0), input_hi = Vec<NU>::Constant(1.0);
};

struct JacobianReport {
  double transition_state = 0.0;
  double transition_param = 0.0;
  double output_state = 0.0;
  double output_param = 0.0;
  double total_param = 0.0; // d G(H(X, theta, u), theta, u) / d theta
  double max_deviation = 0.0;
  double tolerance = 1e-3;
  std::vector<std::string> failures;

  bool pass() const { return failures.empty(); }
};

namespace detail {

template <int N>
Vec<N> sample_box(std::mt19937_64& rng, const Vec<N>& lo, const Vec<N>& hi) {
  Vec<N> v;
  for (int i = 0; i < N; ++i) {
    v(i) = std::uniform_real_distribution<double>(lo(i), hi(i))(rng);
  }
  return v;
}

/// Central differences of f around x; step scales with |x_j|.
template <int NOut, int NIn, typename F>
Mat<NOut, NIn> central_difference(F&& f, const Vec<NIn>& x) {
  Mat<NOut, NIn> j;
  for (int c = 0; c < NIn; ++c) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(c)));
    Vec<NIn> xp = x, xm = x;
    xp(c) += h;
    xm(c) -= h;
    j.col(c) = (f(xp) - f(xm)) / (xp(c) - xm(c));
  }
  return j;
}

template <typename A, typename B>
double relative_deviation(const A& supplied, const B& numeric) {
  double worst = 0.0;
  for (int r = 0; r < supplied.rows(); ++r) {
    for (int c = 0; c < supplied.cols(); ++c) {
      const double s = supplied(r, c), n = numeric(r, c);
      const double scale = std::max({std::abs(s), std::abs(n), 1e-6});
      worst = std::max(worst, std::abs(s - n) / scale);
    }
  }
  return worst;
}

} // namespace detail

/// Compares every supplied Jacobian against central finite differences on
/// `samples` random points. Empty callbacks are skipped.
template <int NX, int NP, int NU, int NY>
JacobianReport validate_jacobians(const ModelCallbacks<NX, NP, NU, NY>& model, const ProbeBox<NX, NP, NU>& box,
                                  int samples, std::uint64_t seed, double tolerance = 1e-3) {
  JacobianReport report;
  report.tolerance = tolerance;
  std::mt19937_64 rng(seed);
  auto track = [&](double& slot, double dev) { slot = std::max(slot, dev); };

  for (int s = 0; s < samples; ++s) {
    const Vec<NX> x = detail::sample_box<NX>(rng, box.state_lo, box.state_hi);
    const Vec<NP> th = detail::sample_box<NP>(rng, box.param_lo, box.param_hi);
    const Vec<NU> u = detail::sample_box<NU>(rng, box.input_lo, box.input_hi);

    if (model.transition && model.transition_state_jacobian) {
      auto fd = detail::central_difference<NX, NX>([&](const Vec<NX>& xv) { return model.transition(xv, th, u); }, x);
      track(report.transition_state, detail::relative_deviation(model.transition_state_jacobian(x, th, u), fd));
    }
    if (model.transition && model.transition_param_jacobian) {
      auto fd = detail::central_difference<NX, NP>([&](const Vec<NP>& tv) { return model.transition(x, tv, u); }, th);
      track(report.transition_param, detail::relative_deviation(model.transition_param_jacobian(x, th, u), fd));
    }
    if (model.output && model.output_state_jacobian) {
      auto fd = detail::central_difference<NY, NX>([&](const Vec<NX>& xv) { return model.output(xv, th, u); }, x);
      track(report.output_state, detail::relative_deviation(model.output_state_jacobian(x, th, u), fd));
    }
    if (model.output && model.output_param_jacobian) {
      auto fd = detail::central_difference<NY, NP>([&](const Vec<NP>& tv) { return model.output(x, tv, u); }, th);
      track(report.output_param, detail::relative_deviation(model.output_param_jacobian(x, th, u), fd));
    }
    if (model.transition && model.output && model.output_state_jacobian && model.transition_param_jacobian &&
        model.output_param_jacobian) {
      // One-step total derivative as the dual filter forms it.
      const Vec<NX> x_next = model.transition(x, th, u);
      const Mat<NY, NP> total = model.output_param_jacobian(x_next, th, u) +
                                model.output_state_jacobian(x_next, th, u) * model.transition_param_jacobian(x, th, u);
      auto fd = detail::central_difference<NY, NP>(
          [&](const Vec<NP>& tv) { return model.output(model.transition(x, tv, u), tv, u); }, th);
      track(report.total_param, detail::relative_deviation(total, fd));
    }
  }

  const std::pair<const char*, double> entries[] = {
      {"dH/dX", report.transition_state}, {"dH/dtheta", report.transition_param}, {"dG/dX", report.output_state},
      {"dG/dtheta", report.output_param}, {"total dG/dtheta", report.total_param}};
  for (const auto& [name, dev] : entries) {
    report.max_deviation = std::max(report.max_deviation, dev);
    if (!(dev < tolerance)) {
      report.failures.push_back(std::string(name) + " deviates by " + std::to_string(dev));
    }
  }
  return report;
}

} // namespace seqsoc
