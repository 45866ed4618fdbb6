#pragma once

// Uniformly sampled current profiles and the generators used for injection
// and drive-cycle excitation. Positive current discharges the cell.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqsoc {

struct CurrentProfile {
  double t_s = 1.0; // sample period, s
  std::vector<double> samples;
  std::string label;

  bool operator==(const CurrentProfile&) const = default;

  std::size_t size() const { return samples.size(); }
  double duration() const { return t_s * static_cast<double>(samples.size()); }

  void validate() const {
    if (!(t_s > 0.0)) throw std::invalid_argument("profile sample period must be positive");
    if (samples.empty()) throw std::invalid_argument("profile '" + label + "' has no samples");
  }
};

inline std::size_t sample_count(double duration, double t_s) {
  return static_cast<std::size_t>(std::llround(duration / t_s));
}

/// m*cos(2*pi*f*k*t_s) for k in [0, duration/t_s).
inline CurrentProfile sine_profile(double m, double f, double t_s, double duration) {
  if (!(t_s > 0.0 && f > 0.0)) {
    throw std::invalid_argument("sine_profile needs positive frequency and sample period");
  }
  if (!(f < 0.5 / t_s)) {
    throw std::invalid_argument("sine frequency " + std::to_string(f) + " Hz violates Nyquist for t_s=" +
                                std::to_string(t_s));
  }
  if (duration * f < 1.0 - 1e-9) {
    throw std::invalid_argument("sine duration must cover at least one period");
  }
  CurrentProfile p;
  p.t_s = t_s;
  p.label = "sine(" + std::to_string(f) + "Hz)";
  const std::size_t n = sample_count(duration, t_s);
  p.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    p.samples[k] = m * std::cos(2.0 * std::numbers::pi * f * static_cast<double>(k) * t_s);
  }
  return p;
}

inline CurrentProfile constant_profile(double amps, double t_s, double duration, std::string label = "idle") {
  CurrentProfile p;
  p.t_s = t_s;
  p.label = std::move(label);
  p.samples.assign(sample_count(duration, t_s), amps);
  return p;
}

inline CurrentProfile sum_profiles(const std::vector<CurrentProfile>& profiles) {
  if (profiles.empty()) {
    throw std::invalid_argument("sum_profiles needs at least one profile");
  }
  CurrentProfile out = profiles.front();
  for (std::size_t p = 1; p < profiles.size(); ++p) {
    const auto& other = profiles[p];
    if (other.t_s != out.t_s || other.size() != out.size()) {
      throw std::invalid_argument("sum_profiles: profile '" + other.label + "' differs in sample period or length");
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
      out.samples[k] += other.samples[k];
    }
    out.label += "+" + other.label;
  }
  return out;
}

/// Appends `tail` to `head`; both must share a sample period.
inline CurrentProfile concat_profiles(CurrentProfile head, const CurrentProfile& tail) {
  if (head.t_s != tail.t_s) {
    throw std::invalid_argument("concat_profiles: sample periods differ");
  }
  head.samples.insert(head.samples.end(), tail.samples.begin(), tail.samples.end());
  head.label += "|" + tail.label;
  return head;
}

/// Synthetic urban-style cycle: repeated idle / accelerate / cruise / regen
/// segments, normalized so that max|i| == peak. Stands in for a scaled NEDC
/// trace, which can be ingested from CSV instead.
inline CurrentProfile drive_cycle_profile(double t_s, double duration, double peak, std::uint64_t seed) {
  if (!(t_s > 0.0)) throw std::invalid_argument("drive cycle sample period must be positive");
  if (!(peak > 0.0)) throw std::invalid_argument("drive cycle peak must be positive");

  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  const std::size_t n = sample_count(duration, t_s);
  std::vector<double> shape;
  shape.reserve(n + 512);

  auto ramp = [&](double from, double to, double seconds) {
    const auto steps = std::max<std::size_t>(1, sample_count(seconds, t_s));
    for (std::size_t k = 1; k <= steps; ++k) {
      shape.push_back(from + (to - from) * static_cast<double>(k) / static_cast<double>(steps));
    }
  };
  auto hold = [&](double level, double seconds, double ripple, double ripple_period) {
    const auto steps = std::max<std::size_t>(1, sample_count(seconds, t_s));
    for (std::size_t k = 0; k < steps; ++k) {
      const double t = static_cast<double>(k) * t_s;
      shape.push_back(level + ripple * std::sin(2.0 * std::numbers::pi * t / ripple_period));
    }
  };

  while (shape.size() < n) {
    hold(0.0, uniform(4.0, 15.0), 0.0, 1.0);
    const double accel = uniform(0.7, 1.0);
    const double cruise = uniform(0.25, 0.55);
    const double regen = -uniform(0.15, 0.45);
    ramp(0.0, accel, uniform(3.0, 8.0));
    hold(accel, uniform(3.0, 10.0), 0.0, 1.0);
    ramp(accel, cruise, uniform(3.0, 8.0));
    hold(cruise, uniform(15.0, 45.0), 0.08 * cruise, uniform(8.0, 20.0));
    ramp(cruise, regen, uniform(2.0, 5.0));
    hold(regen, uniform(4.0, 10.0), 0.0, 1.0);
    ramp(regen, 0.0, uniform(2.0, 4.0));
  }
  shape.resize(n);

  double max_abs = 0.0;
  for (double v : shape) max_abs = std::max(max_abs, std::abs(v));
  CurrentProfile p;
  p.t_s = t_s;
  p.label = "drive-cycle(seed=" + std::to_string(seed) + ")";
  p.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    p.samples[k] = max_abs > 0.0 ? shape[k] * peak / max_abs : 0.0;
  }
  return p;
}

} // namespace seqsoc
