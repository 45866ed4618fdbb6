#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "seqsoc/cell_model.hpp"
#include "seqsoc/profile.hpp"

using namespace seqsoc;

namespace {

const OcvCurve kCurve = OcvCurve::samsung_18650();

// Written out from the curve definition, independent of ocv().
double ocv_reference(double z) {
  return 2.6031 - 0.0674 / z - (-1.527) * z + 0.6265 * std::log(z) + (-0.0297) * std::log(1.0 - z);
}

CellSpec cell() { return CellSpec::samsung_18650_20c(); }

} // namespace

TEST(Ocv, MidpointValue) {
  EXPECT_NEAR(ocv(kCurve, 0.5), 2.8180, 1e-3);
  EXPECT_NEAR(ocv(kCurve, 0.5), ocv_reference(0.5), 1e-12);
}

TEST(Ocv, EightyPercentValue) { EXPECT_NEAR(ocv(kCurve, 0.8), 3.6485, 1e-3); }

TEST(Ocv, EndpointsAreDomainErrors) {
  EXPECT_THROW(ocv(kCurve, 0.0), DomainError);
  EXPECT_THROW(ocv(kCurve, 1.0), DomainError);
  EXPECT_THROW(ocv(kCurve, 0.5e-4), DomainError);
  EXPECT_NO_THROW(ocv(kCurve, 1e-4));
  EXPECT_THROW(ocv_slope(kCurve, 1.0), DomainError);
}

TEST(OcvSlope, MidpointValue) {
  EXPECT_NEAR(ocv_slope(kCurve, 0.5), 0.0674 / 0.25 + 1.527 + 0.6265 / 0.5 + 0.0297 / 0.5, 1e-12);
  EXPECT_NEAR(ocv_slope(kCurve, 0.5), 3.1089, 1e-3);
}

TEST(OcvSlope, NinetyPercentMatchesFiniteDifference) {
  const double h = 1e-6;
  const double fd = (ocv_reference(0.9 + h) - ocv_reference(0.9 - h)) / (2.0 * h);
  EXPECT_NEAR(ocv_slope(kCurve, 0.9), fd, 1e-3);
}

TEST(OcvSlope, AgreesWithFiniteDifferencesOnRandomPoints) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(0.05, 0.95);
  for (int i = 0; i < 100; ++i) {
    const double z = dist(rng);
    const double h = 1e-6;
    const double fd = (ocv(kCurve, z + h) - ocv(kCurve, z - h)) / (2.0 * h);
    EXPECT_LT(std::abs(ocv_slope(kCurve, z) - fd) / std::abs(fd), 1e-4) << "z=" << z;
  }
}

TEST(LinearizeOcv, ConstantCurve) {
  const OcvCurve flat{3.3, 0.0, 0.0, 0.0, 0.0};
  const auto fit = linearize_ocv(flat, 0.2, 0.8);
  EXPECT_NEAR(fit.slope, 0.0, 1e-12);
  EXPECT_NEAR(fit.intercept, 3.3, 1e-12);
}

TEST(LinearizeOcv, AffineCurveIsExact) {
  const OcvCurve affine{3.1, 0.0, -0.7, 0.0, 0.0};
  const auto fit = linearize_ocv(affine, 0.1, 0.9);
  EXPECT_NEAR(fit.slope, 0.7, 1e-12);
  EXPECT_NEAR(fit.intercept, 3.1, 1e-12);
}

TEST(LinearizeOcv, MatchesNormalEquations) {
  // Brute-force normal equations [sum z^2, sum z; sum z, n] [a; b] = [sum z v; sum v].
  const int n = 1001;
  long double szz = 0, sz = 0, szv = 0, sv = 0;
  for (int i = 0; i < n; ++i) {
    const long double z = 0.3L + 0.6L * i / (n - 1);
    const long double v = ocv_reference(static_cast<double>(z));
    szz += z * z;
    sz += z;
    szv += z * v;
    sv += v;
  }
  const long double det = szz * n - sz * sz;
  const double a = static_cast<double>((szv * n - sz * sv) / det);
  const double b = static_cast<double>((szz * sv - sz * szv) / det);
  const auto fit = linearize_ocv(kCurve, 0.3, 0.9);
  EXPECT_NEAR(fit.slope, a, 1e-4);
  EXPECT_NEAR(fit.intercept, b, 1e-4);
}

TEST(LinearizeOcv, RejectsInvalidInterval) {
  EXPECT_THROW(linearize_ocv(kCurve, 0.6, 0.4), DomainError);
  EXPECT_THROW(linearize_ocv(kCurve, 0.0, 0.4), DomainError);
}

TEST(LinearizeOcv, SparseGridIsRaisedToMinimum) {
  const auto sparse = linearize_ocv(kCurve, 0.2, 0.4, 50);
  const auto floor = linearize_ocv(kCurve, 0.2, 0.4, 100);
  EXPECT_EQ(sparse.slope, floor.slope);
  EXPECT_EQ(sparse.intercept, floor.intercept);
}

TEST(StepState, ZeroInputDecay) {
  const auto out = step_state(cell(), {0.1, 0.7}, 0.0, 1.0);
  EXPECT_NEAR(out.state.v_c, 0.1 * std::exp(-1.0 / 15.0), 1e-15);
  EXPECT_NEAR(out.state.v_c, 0.09355, 1e-5);
  EXPECT_EQ(out.state.z, 0.7);
  EXPECT_FALSE(out.saturated);
}

TEST(StepState, CoulombCountingOverOneHour) {
  BatteryState s{0.0, 1.0};
  for (int k = 0; k < 3600; ++k) s = step_state(cell(), s, 1.0, 1.0).state;
  EXPECT_NEAR(s.z, 1.0 - 0.98 / 2.47, 1e-12);
  EXPECT_NEAR(s.z, 0.60324, 1e-5);
}

TEST(StepState, RcSteadyState) {
  BatteryState s{0.0, 0.9};
  for (int k = 0; k < 600; ++k) s = step_state(cell(), s, 0.5, 1.0).state;
  EXPECT_NEAR(s.v_c, 0.03 * 0.5, 1e-12);
}

TEST(StepState, ZeroOrderHoldMatchesAnalyticSolution) {
  // Piecewise-constant current; the RC voltage solves v' = -v/tau + i/C_t exactly.
  const auto spec = cell();
  const double currents[] = {1.0, -0.5, 2.0, 0.0, 0.3};
  BatteryState s{0.02, 0.8};
  double analytic = 0.02;
  for (double i : currents) {
    for (int k = 0; k < 7; ++k) {
      s = step_state(spec, s, i, 0.5).state;
      const double decay = std::exp(-0.5 / spec.ecm.tau);
      analytic = spec.ecm.r_t * i + (analytic - spec.ecm.r_t * i) * decay;
      EXPECT_NEAR(s.v_c, analytic, 1e-15);
    }
  }
}

TEST(StepState, CoulombConsistencyOverRandomProfile) {
  const auto spec = cell();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  BatteryState s{0.0, 0.6};
  double charge = 0.0;
  for (int k = 0; k < 2000; ++k) {
    const double i = dist(rng);
    charge += i * 1.0;
    s = step_state(spec, s, i, 1.0).state;
  }
  EXPECT_NEAR(s.z - 0.6, -spec.eta * charge / (kSecondsPerHour * spec.q_b), 1e-12);
}

TEST(StepState, MonotoneUnderDischarge) {
  BatteryState s{0.0, 0.9};
  for (int k = 0; k < 500; ++k) {
    const auto next = step_state(cell(), s, 1.2, 1.0).state;
    EXPECT_LT(next.z, s.z);
    s = next;
  }
}

TEST(StepState, SaturatesAndFlags) {
  const auto low = step_state(cell(), {0.0, 1e-4}, 100.0, 10.0);
  EXPECT_EQ(low.state.z, 0.0);
  EXPECT_TRUE(low.saturated);
  const auto high = step_state(cell(), {0.0, 0.9999}, -100.0, 10.0);
  EXPECT_EQ(high.state.z, 1.0);
  EXPECT_TRUE(high.saturated);
}

TEST(StepState, RejectsNonPositivePeriod) { EXPECT_THROW(step_state(cell(), {0.0, 0.5}, 1.0, 0.0), std::invalid_argument); }

TEST(TerminalVoltage, OpenCircuitEqualsOcv) {
  EXPECT_EQ(terminal_voltage(cell(), {0.0, 0.63}, 0.0), ocv(kCurve, 0.63));
}

TEST(TerminalVoltage, OhmicDrop) { EXPECT_NEAR(terminal_voltage(cell(), {0.0, 0.8}, 1.0), 3.5485, 1e-3); }

TEST(TerminalVoltage, DischargeLowersVoltage) {
  EXPECT_LT(terminal_voltage(cell(), {0.01, 0.5}, 0.5), terminal_voltage(cell(), {0.01, 0.5}, 0.0));
}

TEST(CellSpec, PresetsAndValidation) {
  EXPECT_DOUBLE_EQ(CellSpec::samsung_18650_20c().q_b, 2.47);
  EXPECT_DOUBLE_EQ(CellSpec::samsung_18650_40c().q_b, 2.62);
  auto bad = cell();
  bad.eta = 1.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = cell();
  bad.ecm.tau = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  EXPECT_NEAR(cell().ecm.c_t(), 500.0, 1e-9);
}

TEST(Simulate, NoiselessVoltageEqualsModel) {
  auto spec = cell();
  spec.sigma_v = 0.0;
  const auto profile = sine_profile(1.0, 0.01, 1.0, 500.0);
  const auto seq = simulate(spec, profile, {0.0, 0.8}, 5);
  BatteryState s{0.0, 0.8};
  for (std::size_t k = 0; k < seq.size(); ++k) {
    s = step_state(spec, s, profile.samples[k], 1.0).state;
    EXPECT_EQ(seq.voltage[k], terminal_voltage(spec, s, profile.samples[k]));
    EXPECT_EQ(seq.truth[k], s);
  }
}

TEST(Simulate, SameSeedSameTrace) {
  const auto profile = drive_cycle_profile(1.0, 600.0, 1.235, 2);
  const auto a = simulate(cell(), profile, {0.0, 0.8}, 99);
  const auto b = simulate(cell(), profile, {0.0, 0.8}, 99);
  const auto c = simulate(cell(), profile, {0.0, 0.8}, 100);
  EXPECT_EQ(a.voltage, b.voltage);
  EXPECT_NE(a.voltage, c.voltage);
}

TEST(Simulate, NoiseStandardDeviation) {
  auto clean_spec = cell();
  clean_spec.sigma_v = 0.0;
  const auto profile = constant_profile(0.1, 1.0, 10000.0);
  const auto noisy = simulate(cell(), profile, {0.0, 0.9}, 17);
  const auto clean = simulate(clean_spec, profile, {0.0, 0.9}, 17);
  double sum = 0.0, sq = 0.0;
  for (std::size_t k = 0; k < noisy.size(); ++k) {
    const double r = noisy.voltage[k] - clean.voltage[k];
    sum += r;
    sq += r * r;
  }
  const double n = static_cast<double>(noisy.size());
  const double std = std::sqrt(sq / n - (sum / n) * (sum / n));
  EXPECT_NEAR(std, 0.020, 0.002);
}

TEST(Simulate, DischargePastEmptyNamesTheSample) {
  const auto profile = constant_profile(5.0, 10.0, 2000.0);
  try {
    simulate(cell(), profile, {0.0, 0.05}, 1);
    FAIL() << "expected a domain error";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("sample"), std::string::npos);
  }
}

TEST(Simulate, RecordsFirstSaturationAtFullCharge) {
  // Charging into the top guard: z clamps to 1 and the OCV guard then rejects it.
  const auto profile = constant_profile(-5.0, 10.0, 200.0);
  EXPECT_THROW(simulate(cell(), profile, {0.0, 0.99}, 1), DomainError);
}
