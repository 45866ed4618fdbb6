#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "seqsoc/pipeline.hpp"
#include "seqsoc/report.hpp"

using namespace seqsoc;

namespace {

CellSpec noiseless(CellSpec spec = CellSpec::samsung_18650_20c()) {
  spec.sigma_v = 0.0;
  return spec;
}

InitialGuess exact_guess(const CellSpec& c, const BatteryState& s) {
  return {c.ecm.r_s, c.ecm.r_t, c.ecm.tau, c.q_b, s.z, s.v_c};
}

// Filtered-domain data produced by the estimator's own bilinear RC recursion.
FilteredStream bilinear_stream(double r_s, double r_t, double tau, std::size_t n) {
  FilteredStream s;
  s.t_s = 1.0;
  double i2 = 0.0;
  double prev = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k);
    const double i = std::sin(2.0 * M_PI * 0.02 * t) + std::sin(2.0 * M_PI * 0.004 * t + 0.3);
    if (k == 0) prev = i;
    const double g = 1.0 / (1.0 + 2.0 * tau);
    i2 = g * (i + prev) + (2.0 * tau - 1.0) / (1.0 + 2.0 * tau) * i2;
    prev = i;
    s.time.push_back(t);
    s.i_bf.push_back(i);
    s.v_bf.push_back(-r_s * i - r_t * i2);
  }
  return s;
}

} // namespace

TEST(BilinearRc, CoefficientsAtFifteenSeconds) {
  const models::BilinearRc rc{1.0};
  EXPECT_NEAR(rc.forward_gain(15.0), 1.0 / 31.0, 1e-15);
  EXPECT_NEAR(rc.pole(15.0), 29.0 / 31.0, 1e-15);
  for (double tau : {0.1, 1.0, 15.0, 1000.0}) EXPECT_LT(std::abs(rc.pole(tau)), 1.0);
}

TEST(BilinearRc, DcGainIsUnity) {
  const models::BilinearRc rc{1.0};
  double i2 = 0.0;
  for (int k = 0; k < 2000; ++k) i2 = rc.i2(15.0, i2, 1.0, 1.0);
  EXPECT_NEAR(i2, 1.0, 1e-12);
}

TEST(InjectionPlan, Validation) {
  EXPECT_NO_THROW(InjectionPlan::ohmic_default().validate());
  EXPECT_NO_THROW(InjectionPlan::rc_default().validate());
  auto p = InjectionPlan::ohmic_default();
  p.frequencies = {6.0};
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = InjectionPlan::ohmic_default();
  p.amplitudes.push_back(1.0);
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = InjectionPlan::rc_default();
  p.hold_up = p.duration;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = InjectionPlan::rc_default();
  p.f_3db = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(InjectionPlan, ProfileLengths) {
  EXPECT_EQ(InjectionPlan::ohmic_default().profile().samples.size(), 2000u);
  EXPECT_EQ(InjectionPlan::rc_default().profile().samples.size(), 900u);
}

TEST(Step1, ZeroCurrentIsDegenerate) {
  FilteredStream s;
  s.time.assign(100, 0.0);
  s.i_bf.assign(100, 0.0);
  s.v_bf.assign(100, 0.01);
  try {
    step1_estimate_rs(s, 0.05, {});
    FAIL() << "expected degenerate excitation";
  } catch (const DegenerateExcitation& e) {
    EXPECT_EQ(e.step(), "step1");
  }
}

TEST(Step1, WithoutExcitationGuardEstimateStaysAtInit) {
  FilteredStream s;
  s.time.assign(100, 0.0);
  s.i_bf.assign(100, 0.0);
  s.v_bf.assign(100, 0.01);
  EstimatorTuning t;
  t.min_excitation = 0.0;
  const auto trace = step1_estimate_rs(s, 0.05, t);
  EXPECT_EQ(trace.final_r_s, 0.05);
}

TEST(Step1, NoiselessInjectionWithinTwoPercent) {
  const auto spec = noiseless();
  const auto plan = InjectionPlan::ohmic_default();
  const auto data = simulate(spec, plan.profile(), {0.0, 0.8}, 1);
  const auto trace = step1_estimate_rs(condition(data, plan.f_3db), 0.02, {});
  EXPECT_LT(std::abs(relative_error(trace.final_r_s, spec.ecm.r_s)), 0.02);
  EXPECT_EQ(trace.covariance_violations, 0u);
  EXPECT_EQ(trace.r_s.size(), 2000u);
}

TEST(Step1, VarianceIsNonIncreasingWithoutRandomWalk) {
  const auto plan = InjectionPlan::ohmic_default();
  const auto data = simulate(CellSpec::samsung_18650_20c(), plan.profile(), {0.0, 0.8}, 4);
  EstimatorTuning t;
  t.param_walk_rel = 0.0;
  const auto trace = step1_estimate_rs(condition(data, plan.f_3db), 0.02, t);
  for (std::size_t k = 1; k < trace.variance.size(); ++k) ASSERT_LE(trace.variance[k], trace.variance[k - 1]);
}

TEST(Step2, ExactModelDataIsAFixedPoint) {
  const auto s = bilinear_stream(0.1, 0.03, 15.0, 900);
  EstimatorTuning t;
  t.sigma_v = 1e-3;
  const auto trace = step2_estimate_rc(s, 0, 0.1, 0.03, 15.0, t);
  EXPECT_NEAR(trace.final_r_t, 0.03, 1e-12);
  EXPECT_NEAR(trace.final_tau, 15.0, 1e-9);
  EXPECT_EQ(trace.projection_events, 0u);
}

TEST(Step2, RecoversParametersFromExactModelData) {
  const auto s = bilinear_stream(0.1, 0.03, 15.0, 3000);
  for (auto mode : {Sensitivity::one_step, Sensitivity::recursive}) {
    EstimatorTuning t;
    t.sigma_v = 1e-3;
    t.rc_sensitivity = mode;
    const auto trace = step2_estimate_rc(s, 0, 0.1, 0.036, 18.0, t);
    EXPECT_LT(std::abs(relative_error(trace.final_r_t, 0.03)), 0.05);
    EXPECT_LT(std::abs(relative_error(trace.final_tau, 15.0)), 0.15);
  }
}

TEST(Step2, SkipsHoldUpSamples) {
  const auto s = bilinear_stream(0.1, 0.03, 15.0, 900);
  const auto trace = step2_estimate_rc(s, 400, 0.1, 0.03, 15.0, {});
  EXPECT_EQ(trace.time.size(), 500u);
  EXPECT_EQ(trace.time.front(), 400.0);
  EXPECT_THROW(step2_estimate_rc(s, 900, 0.1, 0.03, 15.0, {}), DegenerateExcitation);
}

TEST(Step2, TimeConstantStaysInsideBounds) {
  auto s = bilinear_stream(0.1, 0.03, 15.0, 900);
  for (auto& v : s.v_bf) v *= -3.0; // inconsistent data pushes the estimate around
  const auto trace = step2_estimate_rc(s, 0, 0.1, 0.03, 15.0, {});
  for (std::size_t k = 0; k < trace.tau.size(); ++k) {
    ASSERT_GE(trace.tau[k], kTauMin);
    ASSERT_LE(trace.tau[k], kTauMax);
    ASSERT_GE(trace.r_t[k], kResistanceFloor);
  }
}

TEST(Step3, ExactParametersAndStateAreAFixedPoint) {
  SequentialScenario sc;
  sc.truth = noiseless();
  const auto rec = simulate_scenario(sc, 3);
  const auto pre_drive = rec.segments[3].truth.back();
  const auto trace = step3_estimate_soc_soh(rec.steps.drive, sc.truth.ecm, exact_guess(sc.truth, pre_drive),
                                            sc.truth.ocv, sc.truth.eta, {});
  double worst = 0.0;
  for (double e : trace.soc_error()) worst = std::max(worst, std::abs(e));
  EXPECT_LT(worst, 1e-6);
  EXPECT_NEAR(trace.final_q_b, sc.truth.q_b, 1e-6);
  EXPECT_EQ(trace.covariance_violations, 0u);
}

TEST(Step3, NoisyRunTracksSoc) {
  SequentialScenario sc;
  const auto rec = simulate_scenario(sc, 11);
  const auto trace = step3_estimate_soc_soh(rec.steps.drive, sc.truth.ecm, {}, sc.truth.ocv, sc.truth.eta, {});
  const auto err = trace.soc_error();
  EXPECT_LT(tail_mean_abs(trace.time, err, 600.0), 0.02);
  EXPECT_EQ(trace.covariance_violations, 0u);
}

TEST(Step3, PersistentModelMismatchAborts) {
  SequentialScenario sc;
  sc.truth = noiseless();
  auto rec = simulate_scenario(sc, 5);
  for (auto& v : rec.steps.drive.voltage) v += 0.5;
  EstimatorTuning t;
  t.sigma_v = 1e-3;
  t.soc_std = 1e-6;
  t.v_c_std = 1e-6;
  t.q_b_std = 1e-6;
  t.soc_walk = 0.0;
  t.v_c_walk = 0.0;
  t.q_b_walk = 0.0;
  const auto guess = exact_guess(sc.truth, rec.segments[3].truth.back());
  try {
    step3_estimate_soc_soh(rec.steps.drive, sc.truth.ecm, guess, sc.truth.ocv, sc.truth.eta, t);
    FAIL() << "expected divergence";
  } catch (const EstimationDivergence& e) {
    EXPECT_EQ(e.step(), "step3");
  }
}

TEST(Sequential, SameSeedSameResult) {
  const SequentialScenario sc;
  const auto a = run_sequential(sc, 21);
  const auto b = run_sequential(sc, 21);
  EXPECT_EQ(a.ohmic.r_s, b.ohmic.r_s);
  EXPECT_EQ(a.rc.tau, b.rc.tau);
  EXPECT_EQ(a.soc.soc, b.soc.soc);
  EXPECT_NE(run_sequential(sc, 22).soc.soc, a.soc.soc);
}

TEST(Sequential, LaterStepsConsumeEarlierEstimates) {
  const auto res = run_sequential(SequentialScenario{}, 8);
  EXPECT_EQ(res.provenance.rc_stage_r_s, res.r_s_hat);
  EXPECT_EQ(res.provenance.soc_stage_params.r_s, res.r_s_hat);
  EXPECT_EQ(res.provenance.soc_stage_params.r_t, res.r_t_hat);
  EXPECT_EQ(res.provenance.soc_stage_params.tau, res.tau_hat);
  EXPECT_EQ(res.ohmic.covariance_violations + res.rc.covariance_violations + res.soc.covariance_violations, 0u);
}

TEST(Sequential, SegmentsAreContiguousInTime) {
  const auto rec = simulate_scenario(SequentialScenario{}, 2);
  ASSERT_EQ(rec.segments.size(), 5u);
  for (std::size_t s = 1; s < rec.segments.size(); ++s) {
    const auto& prev = rec.segments[s - 1];
    const auto& cur = rec.segments[s];
    EXPECT_NEAR(cur.time.front(), prev.time.back() + prev.t_s, 1e-9);
    EXPECT_EQ(cur.truth.front().z <= prev.truth.back().z + 1e-12, true);
  }
  EXPECT_EQ(rec.steps.drive.size(), 3600u);
}

TEST(Sequential, NoiselessStepOneIsAccurate) {
  SequentialScenario sc;
  sc.truth = noiseless();
  const auto res = run_sequential(sc, 1);
  EXPECT_LT(std::abs(relative_error(res.r_s_hat, sc.truth.ecm.r_s)), 0.005);
}

TEST(Concurrent, ExactStartStaysExactWithoutNoise) {
  ConcurrentScenario sc;
  sc.truth = noiseless();
  sc.guess = exact_guess(sc.truth, sc.initial_state);
  const auto res = run_concurrent_baseline(sc, 1);
  double worst = 0.0;
  for (double e : res.soc.soc_error()) worst = std::max(worst, std::abs(e));
  EXPECT_LT(worst, 1e-9);
  EXPECT_NEAR(res.r_t_hat, sc.truth.ecm.r_t, 1e-9);
  EXPECT_NEAR(res.tau_hat, sc.truth.ecm.tau, 1e-6);
  EXPECT_NEAR(res.soc.final_q_b, sc.truth.q_b, 1e-9);
  EXPECT_EQ(res.soc.covariance_violations, 0u);
}

TEST(Concurrent, RejectsZeroMacroRatio) {
  ConcurrentScenario sc;
  sc.tuning.macro_ratio = 0;
  EXPECT_THROW(run_concurrent_baseline(sc, 1), std::invalid_argument);
}

TEST(Concurrent, ParametersRespectBounds) {
  const auto res = run_concurrent_baseline(ConcurrentScenario{}, 6);
  for (std::size_t k = 0; k < res.tau.size(); ++k) {
    ASSERT_GE(res.tau[k], kTauMin);
    ASSERT_LE(res.tau[k], kTauMax);
    ASSERT_GE(res.r_s[k], kResistanceFloor);
    ASSERT_GE(res.soc.q_b[k], kCapacityFloor);
    ASSERT_GE(res.soc.soc[k], 0.0);
    ASSERT_LE(res.soc.soc[k], 1.0);
  }
}

TEST(Metrics, DeriveSeedSeparatesStreams) {
  EXPECT_EQ(derive_seed(1, 2), derive_seed(1, 2));
  EXPECT_NE(derive_seed(1, 2), derive_seed(1, 3));
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 2));
}

TEST(Metrics, ConvergenceTimeNeedsAFullHold) {
  std::vector<double> t, e;
  for (int k = 0; k < 400; ++k) {
    t.push_back(k);
    e.push_back(k < 50 ? 1.0 : (k == 100 ? 1.0 : 0.0));
  }
  EXPECT_EQ(convergence_time(t, e, 0.5, 120.0), std::optional<double>(101.0));
  EXPECT_EQ(convergence_time(t, e, 0.5, 1000.0), std::nullopt);
}

TEST(Metrics, TailMeanUsesFinalWindow) {
  std::vector<double> t, e;
  for (int k = 0; k < 1000; ++k) {
    t.push_back(k);
    e.push_back(k >= 900 ? -2.0 : 10.0);
  }
  EXPECT_DOUBLE_EQ(tail_mean_abs(t, e, 99.0), 2.0);
  EXPECT_DOUBLE_EQ(max_abs_after(t, e, 900.0), 2.0);
}

TEST(Report, InnovationStatisticsOfWhiteNoise) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 0.02);
  std::vector<double> v(5000);
  for (auto& x : v) x = n(rng);
  const auto s = innovation_stats(v, 0.02);
  EXPECT_NEAR(s.variance_ratio, 1.0, 0.06);
  EXPECT_LT(std::abs(s.lag1_autocorrelation), 0.05);
  EXPECT_EQ(s.count, 5000u);
}

TEST(Report, SequentialReportNamesEveryQuantity) {
  const auto res = run_sequential(SequentialScenario{}, 3);
  const auto r = sequential_report(res, CellSpec::samsung_18650_20c(), 0.02);
  for (const char* name : {"r_s", "r_t", "tau", "q_b", "soc"}) {
    const auto* q = r.find(name);
    ASSERT_NE(q, nullptr) << name;
    EXPECT_TRUE(q->truth.has_value());
  }
  EXPECT_TRUE(r.soc_tail_mean_error.has_value());
  const auto blind = sequential_report(res, std::nullopt, 0.02);
  EXPECT_FALSE(blind.find("r_s")->truth.has_value());
}
