#pragma once

// First-order equivalent-circuit cell: OCV curve, ZOH dynamics and a
// noisy measurement simulator used as ground truth.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqsoc/profile.hpp"

namespace seqsoc {

/// Raised when an SoC argument falls outside the guarded OCV domain.
class DomainError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

inline constexpr double kDefaultSocGuard = 1e-4;
inline constexpr double kSecondsPerHour = 3600.0;

/// v_oc(z) = k0 - k1/z - k2*z + k3*ln(z) + k4*ln(1-z)
struct OcvCurve {
  double k0 = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  double k3 = 0.0;
  double k4 = 0.0;

  bool operator==(const OcvCurve&) const = default;

  /// Coefficients fitted for the Samsung 18650 cell used throughout the presets.
  static OcvCurve samsung_18650() { return {2.6031, 0.0674, -1.527, 0.6265, -0.0297}; }
};

namespace detail {
inline void check_soc_domain(double z, double guard) {
  if (!(z >= guard && z <= 1.0 - guard)) {
    throw DomainError("SoC " + std::to_string(z) + " outside OCV domain [" + std::to_string(guard) + ", " +
                      std::to_string(1.0 - guard) + "]");
  }
}
} // namespace detail

inline double ocv(const OcvCurve& c, double z, double guard = kDefaultSocGuard) {
  detail::check_soc_domain(z, guard);
  return c.k0 - c.k1 / z - c.k2 * z + c.k3 * std::log(z) + c.k4 * std::log(1.0 - z);
}

/// Analytic d(ocv)/dz.
inline double ocv_slope(const OcvCurve& c, double z, double guard = kDefaultSocGuard) {
  detail::check_soc_domain(z, guard);
  return c.k1 / (z * z) - c.k2 + c.k3 / z - c.k4 / (1.0 - z);
}

/// Clamp into the guarded interval; used by estimators before evaluating the curve.
inline double clamp_soc(double z, double guard = kDefaultSocGuard) {
  return std::clamp(z, guard, 1.0 - guard);
}

struct AffineOcv {
  double slope = 0.0;     // a, volts per unit SoC
  double intercept = 0.0; // b, volts
};

/// Least-squares line through the curve sampled on a uniform grid over [z_lo, z_hi].
inline AffineOcv linearize_ocv(const OcvCurve& c, double z_lo, double z_hi, std::size_t points = 1001,
                               double guard = kDefaultSocGuard) {
  if (!(z_lo < z_hi)) {
    throw DomainError("linearize_ocv needs z_lo < z_hi");
  }
  detail::check_soc_domain(z_lo, guard);
  detail::check_soc_domain(z_hi, guard);
  points = std::max<std::size_t>(points, 100);

  // Centered accumulation keeps the normal equations well conditioned.
  const double mid = 0.5 * (z_lo + z_hi);
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double z = z_lo + (z_hi - z_lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    const double x = z - mid;
    const double y = ocv(c, z, guard);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(points);
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double intercept_mid = (sy - slope * sx) / n;
  return {slope, intercept_mid - slope * mid};
}

struct EcmParams {
  double r_s = 0.0; // ohmic resistance, ohm
  double r_t = 0.0; // diffusion resistance, ohm
  double tau = 0.0; // R_t * C_t, s

  bool operator==(const EcmParams&) const = default;

  double c_t() const { return tau / r_t; }

  void validate() const {
    if (!(r_s > 0.0 && r_t > 0.0 && tau > 0.0)) {
      throw std::invalid_argument("ECM parameters must be strictly positive");
    }
  }
};

struct CellSpec {
  std::string name;
  double q_b = 0.0;   // capacity, Ah
  double eta = 1.0;   // coulombic efficiency
  EcmParams ecm;
  OcvCurve ocv;
  double sigma_v = 0.0; // voltage noise std, V

  bool operator==(const CellSpec&) const = default;

  void validate() const {
    if (!(q_b > 0.0)) throw std::invalid_argument("cell capacity must be positive");
    if (!(eta > 0.0 && eta <= 1.0)) throw std::invalid_argument("efficiency must lie in (0, 1]");
    if (!(sigma_v >= 0.0)) throw std::invalid_argument("voltage noise std must be non-negative");
    ecm.validate();
  }

  /// Samsung 18650 at 20 degC.
  static CellSpec samsung_18650_20c() {
    return {"samsung-18650-20C", 2.47, 0.98, {0.1, 0.03, 15.0}, OcvCurve::samsung_18650(), 0.020};
  }
  /// Same cell at 40 degC; only the capacity is known to shift.
  static CellSpec samsung_18650_40c() {
    return {"samsung-18650-40C", 2.62, 0.98, {0.1, 0.03, 15.0}, OcvCurve::samsung_18650(), 0.020};
  }
};

struct BatteryState {
  double v_c = 0.0; // RC pair voltage, V
  double z = 0.0;   // SoC

  bool operator==(const BatteryState&) const = default;
};

struct StepOutcome {
  BatteryState state;
  bool saturated = false;
};

/// Exact zero-order-hold step over t_s seconds with current i_b (positive = discharge).
inline StepOutcome step_state(const CellSpec& spec, const BatteryState& s, double i_b, double t_s) {
  if (!(t_s > 0.0)) {
    throw std::invalid_argument("sample period must be positive");
  }
  const double decay = std::exp(-t_s / spec.ecm.tau);
  StepOutcome out;
  out.state.v_c = decay * s.v_c + spec.ecm.r_t * (1.0 - decay) * i_b;
  const double z = s.z - spec.eta * t_s * i_b / (spec.q_b * kSecondsPerHour);
  out.state.z = std::clamp(z, 0.0, 1.0);
  out.saturated = out.state.z != z;
  return out;
}

/// Noise-free terminal voltage v_oc(z) - R_s*i_b - v_c.
inline double terminal_voltage(const CellSpec& spec, const BatteryState& s, double i_b,
                               double guard = kDefaultSocGuard) {
  return ocv(spec.ocv, s.z, guard) - spec.ecm.r_s * i_b - s.v_c;
}

/// Uniformly sampled measurement record, optionally carrying the true state.
struct MeasurementSequence {
  double t_s = 1.0;
  std::vector<double> time;
  std::vector<double> current;
  std::vector<double> voltage;
  std::vector<BatteryState> truth; // empty when unknown (recorded data)
  std::optional<std::size_t> first_saturation;

  std::size_t size() const { return current.size(); }
  bool has_truth() const { return truth.size() == current.size() && !truth.empty(); }
};

/// Drives the cell with `profile`. Sample k applies current[k] over the preceding
/// period, then measures v_b at the new state: x_k = f(x_{k-1}, i_k), v_k = g(x_k, i_k).
inline MeasurementSequence simulate(const CellSpec& spec, const CurrentProfile& profile, const BatteryState& init,
                                    std::uint64_t seed, double time_offset = 0.0) {
  profile.validate();
  MeasurementSequence out;
  out.t_s = profile.t_s;
  const std::size_t n = profile.samples.size();
  out.time.reserve(n);
  out.current.reserve(n);
  out.voltage.reserve(n);
  out.truth.reserve(n);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  BatteryState state = init;
  for (std::size_t k = 0; k < n; ++k) {
    const double i_b = profile.samples[k];
    const auto step = step_state(spec, state, i_b, profile.t_s);
    state = step.state;
    if (step.saturated && !out.first_saturation) {
      out.first_saturation = k;
    }
    double clean = 0.0;
    try {
      clean = terminal_voltage(spec, state, i_b);
    } catch (const DomainError& e) {
      throw DomainError("simulate: sample " + std::to_string(k) + (out.first_saturation ? " (saturated)" : "") +
                        ": " + e.what());
    }
    const double e = noise(rng);
    out.time.push_back(time_offset + static_cast<double>(k) * profile.t_s);
    out.current.push_back(i_b);
    out.voltage.push_back(spec.sigma_v > 0.0 ? clean + spec.sigma_v * e : clean);
    out.truth.push_back(state);
  }
  return out;
}

} // namespace seqsoc
