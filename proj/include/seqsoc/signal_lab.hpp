#pragma once

// Frequency-separation analysis: how the filtered terminal voltage splits
// into initial-SoC, SoC-variation, ohmic and RC contributions under a
// sinusoidal current.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "seqsoc/cell_model.hpp"
#include "seqsoc/highpass.hpp"
#include "seqsoc/profile.hpp"

namespace seqsoc {

/// Response of the high-pass filter to the constant (a*z0 + b) switched on at t=0.
inline double initial_soc_decay(double a, double b, double z0, double t_c, double t) {
  if (!(t_c > 0.0)) throw std::invalid_argument("time constant must be positive");
  if (t < 0.0) throw std::invalid_argument("time must be non-negative");
  return (a * z0 + b) * std::exp(-t / t_c);
}

struct BreakdownRequest {
  double a = 0.0;      // linearized OCV slope, V per unit SoC
  double b = 0.0;      // linearized OCV intercept, V
  double z0 = 0.8;     // initial SoC
  double f = 0.4;      // injected frequency, Hz
  double m = 1.0;      // current amplitude, A
  double t_c = 80.0;   // high-pass time constant, s
  double duration = 0; // s; 0 selects ten periods or 10*t_c, whichever is longer
  double t_s = 0;      // s; 0 selects min(1 s, 1/(200 f))
};

struct ComponentAmplitudes {
  double init = 0.0; // |initial-SoC term| at the final sample
  double socvar = 0.0;
  double ohmic = 0.0;
  double rc = 0.0;
};

struct ComponentBreakdown {
  double t_s = 0.0;
  double f = 0.0;
  std::vector<double> time;
  std::vector<double> init;
  std::vector<double> socvar;
  std::vector<double> ohmic;
  std::vector<double> rc;
  ComponentAmplitudes amplitude; // steady state, over the last full period

  std::size_t size() const { return time.size(); }
  double total(std::size_t k) const { return init[k] + socvar[k] + ohmic[k] + rc[k]; }
};

namespace detail {
inline double half_peak_to_peak(const std::vector<double>& xs, std::size_t window) {
  window = std::clamp<std::size_t>(window, 1, xs.size());
  const auto first = xs.end() - static_cast<std::ptrdiff_t>(window);
  const auto [lo, hi] = std::minmax_element(first, xs.end());
  return 0.5 * (*hi - *lo);
}
} // namespace detail

inline BreakdownRequest resolve_defaults(BreakdownRequest req) {
  if (req.t_s <= 0.0) req.t_s = std::min(1.0, 1.0 / (200.0 * req.f));
  if (req.duration <= 0.0) req.duration = std::max(10.0 / req.f, 10.0 * req.t_c);
  return req;
}

/// All components run through the same filter started at rest, matching the
/// zero-initial-condition Laplace analysis; their sum equals the filtered
/// linearized terminal-voltage deviation sample by sample.
inline ComponentBreakdown component_breakdown(const CellSpec& spec, BreakdownRequest req) {
  spec.validate();
  req = resolve_defaults(req);
  const CurrentProfile current = sine_profile(req.m, req.f, req.t_s, req.duration);
  const std::size_t n = current.size();

  auto hpf = HighPassFilter::from_time_constant(req.t_c, req.t_s, HighPassFilter::Start::at_rest);
  auto hpf_offset = hpf;

  ComponentBreakdown out;
  out.t_s = req.t_s;
  out.f = req.f;
  out.time.resize(n);
  out.init.resize(n);
  out.socvar.resize(n);
  out.ohmic.resize(n);
  out.rc.resize(n);

  const double soc_gain = -req.a * spec.eta * req.t_s / (spec.q_b * kSecondsPerHour);
  const double decay = std::exp(-req.t_s / spec.ecm.tau);
  const double offset = req.a * req.z0 + req.b;
  double charge = 0.0; // running sum of filtered current
  double v_rc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double i_bf = hpf(current.samples[k]);
    charge += i_bf;
    v_rc = decay * v_rc + spec.ecm.r_t * (1.0 - decay) * i_bf;
    out.time[k] = static_cast<double>(k) * req.t_s;
    out.init[k] = hpf_offset(offset);
    out.socvar[k] = soc_gain * charge;
    out.ohmic[k] = -spec.ecm.r_s * i_bf;
    out.rc[k] = -v_rc;
  }

  const auto period = static_cast<std::size_t>(std::llround(1.0 / (req.f * req.t_s)));
  out.amplitude.init = std::abs(out.init.back());
  out.amplitude.socvar = detail::half_peak_to_peak(out.socvar, period);
  out.amplitude.ohmic = detail::half_peak_to_peak(out.ohmic, period);
  out.amplitude.rc = detail::half_peak_to_peak(out.rc, period);
  return out;
}

} // namespace seqsoc
