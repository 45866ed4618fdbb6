#pragma once

// Three-step sequential estimation:
//   1. R_s from high-pass filtered data under high-frequency injection (EKF)
//   2. R_t, tau from filtered data under medium-frequency injection (EKF)
//   3. SoC and capacity from raw data under a drive cycle (dual EKF)
// plus a concurrent baseline that estimates everything at once.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "seqsoc/cell_model.hpp"
#include "seqsoc/estimators.hpp"
#include "seqsoc/highpass.hpp"
#include "seqsoc/metrics.hpp"
#include "seqsoc/models.hpp"
#include "seqsoc/profile.hpp"

namespace seqsoc {

/// A pipeline stage failed; `step` names it ("step1", "step2", "step3", "concurrent").
class PipelineError : public std::runtime_error {
public:
  PipelineError(std::string step, const std::string& what)
      : std::runtime_error(step + ": " + what), step_(std::move(step)) {}
  const std::string& step() const { return step_; }

private:
  std::string step_;
};

class DegenerateExcitation : public PipelineError {
public:
  using PipelineError::PipelineError;
};

class EstimationDivergence : public PipelineError {
public:
  using PipelineError::PipelineError;
};

/// Injection profile and conditioning for one identification step.
struct InjectionPlan {
  std::vector<double> frequencies; // Hz
  std::vector<double> amplitudes;  // A, one per frequency
  double duration = 0.0;           // s
  double t_s = 1.0;                // s
  double f_3db = 0.0;              // high-pass bandwidth, Hz
  double hold_up = 0.0;            // s discarded before estimation

  bool operator==(const InjectionPlan&) const = default;

  void validate() const {
    if (frequencies.empty() || frequencies.size() != amplitudes.size()) {
      throw std::invalid_argument("injection plan needs one amplitude per frequency");
    }
    if (!(t_s > 0.0 && duration > 0.0)) throw std::invalid_argument("injection plan needs positive t_s and duration");
    for (double f : frequencies) {
      if (!(f > 0.0 && f < 0.5 / t_s)) {
        throw std::invalid_argument("injection frequency " + std::to_string(f) + " Hz violates Nyquist");
      }
    }
    if (!(f_3db > 0.0 && f_3db < 0.5 / t_s)) throw std::invalid_argument("filter bandwidth violates Nyquist");
    if (!(hold_up >= 0.0 && hold_up < duration)) throw std::invalid_argument("hold-up must be shorter than duration");
  }

  CurrentProfile profile() const {
    validate();
    std::vector<CurrentProfile> parts;
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
      parts.push_back(sine_profile(amplitudes[i], frequencies[i], t_s, duration));
    }
    return sum_profiles(parts);
  }

  /// 0.5 Hz at `amplitude`, sampled at 10 Hz for 200 s, 0.05 Hz filter.
  static InjectionPlan ohmic_default(double amplitude = 1.235) {
    return {{0.5}, {amplitude}, 200.0, 0.1, 0.05, 0.0};
  }
  /// 0.02 Hz over a 0.004 Hz base, 1 Hz sampling for 900 s, 0.002 Hz filter, 400 s hold-up.
  static InjectionPlan rc_default(double amplitude = 1.235) {
    return {{0.004, 0.02}, {amplitude, amplitude}, 900.0, 1.0, 0.002, 400.0};
  }
};

struct InitialGuess {
  double r_s = 0.02;
  double r_t = 0.03;
  double tau = 15.0;
  double q_b = 2.0;
  double soc = 0.5;
  double v_c = 0.0;

  bool operator==(const InitialGuess&) const = default;
};

/// Filter covariances. Random-walk variances for R_s, R_t and tau are
/// (param_walk_rel * initial guess)^2 per step.
struct EstimatorTuning {
  double sigma_v = 0.02;          // measurement std, V
  double param_walk_rel = 1e-4;   // relative random walk for R_s, R_t, tau
  double q_b_walk = 1e-5;         // Ah per step
  double v_c_walk = 1e-4;         // V per step
  double soc_walk = 1e-6;         // per step
  double r_s_std = 0.1;           // initial standard deviations
  double r_t_std = 0.01;
  double tau_std = 5.0;
  double q_b_std = 0.5;
  double v_c_std = 0.05;
  double soc_std = 0.3;
  Sensitivity rc_sensitivity = Sensitivity::one_step;   // d i2 / d tau in step 2
  Sensitivity soc_sensitivity = Sensitivity::recursive; // d X / d theta in step 3 and the baseline
  double min_excitation = 1e-3;   // A; below this everywhere the data carries no information
  double divergence_sigma = 10.0; // normalized innovation threshold
  int divergence_steps = 50;      // consecutive steps above threshold before aborting
  int macro_ratio = 10;           // concurrent baseline: state steps per parameter update

  bool operator==(const EstimatorTuning&) const = default;
};

inline constexpr double kTauMin = 0.1;
inline constexpr double kTauMax = 1000.0;
inline constexpr double kResistanceFloor = 1e-6;
inline constexpr double kCapacityFloor = 1e-3;

struct FilteredStream {
  double t_s = 1.0;
  std::vector<double> time;
  std::vector<double> i_bf;
  std::vector<double> v_bf;

  std::size_t size() const { return time.size(); }
};

/// Runs current and voltage through identical high-pass filters.
inline FilteredStream condition(const MeasurementSequence& data, double f_3db) {
  FilteredStream out;
  out.t_s = data.t_s;
  out.time = data.time;
  out.i_bf = HighPassFilter::design(f_3db, data.t_s).filter(data.current);
  out.v_bf = HighPassFilter::design(f_3db, data.t_s).filter(data.voltage);
  return out;
}

inline std::size_t holdup_samples(double hold_up, double t_s) {
  return static_cast<std::size_t>(std::llround(hold_up / t_s));
}

inline FilteredStream drop_leading(FilteredStream s, std::size_t count) {
  count = std::min(count, s.size());
  auto cut = [count](std::vector<double>& v) { v.erase(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(count)); };
  cut(s.time);
  cut(s.i_bf);
  cut(s.v_bf);
  return s;
}

namespace detail {
inline void require_excitation(const std::vector<double>& i, std::size_t from, double threshold, const char* step) {
  for (std::size_t k = from; k < i.size(); ++k) {
    if (std::abs(i[k]) >= threshold) return;
  }
  throw DegenerateExcitation(step, "filtered current never exceeds " + std::to_string(threshold) + " A");
}
} // namespace detail

struct OhmicTrace {
  std::vector<double> time;
  std::vector<double> r_s;
  std::vector<double> variance;
  std::vector<double> innovation;
  double final_r_s = 0.0;
  std::size_t covariance_violations = 0; // steps whose covariance was not symmetric PSD
};

/// Scalar EKF on v_bf(k) = -R_s * i_bf(k).
inline OhmicTrace step1_estimate_rs(const FilteredStream& data, double init, const EstimatorTuning& tuning) {
  if (data.size() == 0) throw DegenerateExcitation("step1", "no samples after hold-up");
  detail::require_excitation(data.i_bf, 0, tuning.min_excitation, "step1");
  const auto model = models::ohmic_model();
  NoiseConfig<1, 1, 1> noise;
  noise.sigma_r(0, 0) = std::pow(tuning.param_walk_rel * init, 2);
  noise.sigma_v(0, 0) = tuning.sigma_v * tuning.sigma_v;

  GaussianEstimate<1> est;
  est.mean(0) = init;
  est.cov(0, 0) = tuning.r_s_std * tuning.r_s_std;

  OhmicTrace trace;
  const Vec<1> unused = Vec<1>::Zero();
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto upd = ekf_update(ekf_predict(est, noise), Vec<1>(data.v_bf[k]), model, noise, unused,
                                Vec<1>(data.i_bf[k]));
    est = upd.estimate;
    est.mean(0) = std::max(est.mean(0), kResistanceFloor);
    if (!is_valid_covariance(est.cov)) ++trace.covariance_violations;
    trace.time.push_back(data.time[k]);
    trace.r_s.push_back(est.mean(0));
    trace.variance.push_back(est.cov(0, 0));
    trace.innovation.push_back(upd.innovation(0));
  }
  trace.final_r_s = est.mean(0);
  return trace;
}

struct RcTrace {
  std::vector<double> time;
  std::vector<double> r_t;
  std::vector<double> tau;
  std::vector<double> var_r_t;
  std::vector<double> var_tau;
  std::vector<double> innovation;
  double final_r_t = 0.0;
  double final_tau = 0.0;
  std::size_t projection_events = 0;
  std::size_t covariance_violations = 0;
};

/// Two-parameter EKF on v_bf(k) = -R_s_hat i_bf(k) - R_t i2(k). The i2 recursion
/// runs over the whole stream using the latest tau estimate; updates start after
/// `skip` samples.
inline RcTrace step2_estimate_rc(const FilteredStream& data, std::size_t skip, double r_s_hat, double r_t_init,
                                 double tau_init, const EstimatorTuning& tuning) {
  if (data.size() <= skip) throw DegenerateExcitation("step2", "no samples after hold-up");
  detail::require_excitation(data.i_bf, skip, tuning.min_excitation, "step2");
  const models::BilinearRc rc{data.t_s};
  const auto model = models::rc_model(r_s_hat, data.t_s);

  NoiseConfig<2, 2, 1> noise;
  noise.sigma_r.diagonal() << std::pow(tuning.param_walk_rel * r_t_init, 2),
      std::pow(tuning.param_walk_rel * tau_init, 2);
  noise.sigma_v(0, 0) = tuning.sigma_v * tuning.sigma_v;

  GaussianEstimate<2> est;
  est.mean << r_t_init, tau_init;
  est.cov = Mat<2, 2>::Zero();
  est.cov.diagonal() << tuning.r_t_std * tuning.r_t_std, tuning.tau_std * tuning.tau_std;

  RcTrace trace;
  Vec<2> memory = Vec<2>::Zero(); // [i2(k-1), i_bf(k-1)]
  double di2_dtau_prev = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const Vec<1> u(data.i_bf[k]);
    if (k == 0) memory(1) = u(0);
    if (k >= skip) {
      const auto prior = ekf_predict(est, noise);
      ModelCallbacks<2, 2, 1, 1> stage_model = model;
      if (tuning.rc_sensitivity == Sensitivity::recursive) {
        const double carry = rc.pole(prior.mean(1)) * di2_dtau_prev;
        stage_model.output_param_jacobian = [&model, carry](const Vec<2>& x, const Vec<2>& th, const Vec<1>& in) {
          Mat<1, 2> c = model.output_param_jacobian(x, th, in);
          c(0, 1) -= th(0) * carry;
          return c;
        };
      }
      const auto upd = ekf_update(prior, Vec<1>(data.v_bf[k]), stage_model, noise, memory, u);
      est = upd.estimate;
      const Vec<2> raw = est.mean;
      est.mean(0) = std::max(est.mean(0), kResistanceFloor);
      est.mean(1) = std::clamp(est.mean(1), kTauMin, kTauMax);
      if (raw != est.mean) ++trace.projection_events;
      if (!is_valid_covariance(est.cov)) ++trace.covariance_violations;
      trace.time.push_back(data.time[k]);
      trace.r_t.push_back(est.mean(0));
      trace.tau.push_back(est.mean(1));
      trace.var_r_t.push_back(est.cov(0, 0));
      trace.var_tau.push_back(est.cov(1, 1));
      trace.innovation.push_back(upd.innovation(0));
    }
    const double tau = est.mean(1);
    di2_dtau_prev = rc.di2_dtau(tau, memory(0), memory(1), u(0)) + rc.pole(tau) * di2_dtau_prev;
    memory = Vec<2>(rc.i2(tau, memory(0), memory(1), u(0)), u(0));
  }
  trace.final_r_t = est.mean(0);
  trace.final_tau = est.mean(1);
  return trace;
}

struct SocTrace {
  std::vector<double> time;
  std::vector<double> v_c;
  std::vector<double> soc;
  std::vector<double> q_b;
  std::vector<double> var_v_c;
  std::vector<double> var_soc;
  std::vector<double> var_q_b;
  std::vector<double> v_pred; // output at the prior
  std::vector<double> v_meas;
  std::vector<double> innovation;
  std::vector<double> soc_true; // empty without truth
  std::size_t clamp_events = 0;
  std::size_t covariance_violations = 0;
  double final_soc = 0.0;
  double final_q_b = 0.0;

  bool has_truth() const { return soc_true.size() == soc.size() && !soc.empty(); }
  std::vector<double> soc_error() const {
    std::vector<double> e(soc.size());
    for (std::size_t k = 0; k < soc.size() && has_truth(); ++k) e[k] = soc[k] - soc_true[k];
    return e;
  }
};

namespace detail {

/// Aborts when the normalized innovation stays above the threshold for too long.
class DivergenceWatch {
public:
  DivergenceWatch(const EstimatorTuning& t, std::string step)
      : sigma_(t.divergence_sigma), limit_(t.divergence_steps), step_(std::move(step)) {}

  void observe(double innovation, double variance, double time) {
    if (std::abs(innovation) > sigma_ * std::sqrt(variance)) {
      if (++run_ >= limit_) {
        throw EstimationDivergence(step_, "innovation above " + std::to_string(sigma_) + " sigma for " +
                                              std::to_string(run_) + " steps at t=" + std::to_string(time) + " s");
      }
    } else {
      run_ = 0;
    }
  }

private:
  double sigma_;
  int limit_;
  std::string step_;
  int run_ = 0;
};

template <int NX>
bool clamp_state_soc(Vec<NX>& x) {
  const double z = clamp_soc(x(1));
  const bool clamped = z != x(1);
  x(1) = z;
  return clamped;
}

} // namespace detail

/// Dual EKF over state [v_c, z] and capacity, using identified ECM parameters.
inline SocTrace step3_estimate_soc_soh(const MeasurementSequence& data, const EcmParams& params,
                                       const InitialGuess& guess, const OcvCurve& curve, double eta,
                                       const EstimatorTuning& tuning) {
  if (data.size() == 0) throw DegenerateExcitation("step3", "no samples");
  const auto model = models::soc_model(params, curve, eta, data.t_s);

  NoiseConfig<2, 1, 1> noise;
  noise.sigma_r(0, 0) = tuning.q_b_walk * tuning.q_b_walk;
  noise.sigma_w.diagonal() << tuning.v_c_walk * tuning.v_c_walk, tuning.soc_walk * tuning.soc_walk;
  noise.sigma_v(0, 0) = tuning.sigma_v * tuning.sigma_v;

  DualEstimate<2, 1> est;
  est.state.mean << guess.v_c, guess.soc;
  est.state.cov = Mat<2, 2>::Zero();
  est.state.cov.diagonal() << tuning.v_c_std * tuning.v_c_std, tuning.soc_std * tuning.soc_std;
  est.param.mean(0) = guess.q_b;
  est.param.cov(0, 0) = tuning.q_b_std * tuning.q_b_std;

  DekfOptions options;
  options.sensitivity = tuning.soc_sensitivity;
  detail::DivergenceWatch watch(tuning, "step3");

  SocTrace trace;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto step = dekf_step(est, Vec<1>(data.voltage[k]), Vec<1>(data.current[k]), model, noise, options);
    est = step.estimate;
    if (detail::clamp_state_soc(est.state.mean)) ++trace.clamp_events;
    est.param.mean(0) = std::max(est.param.mean(0), kCapacityFloor);
    if (!is_valid_covariance(est.state.cov) || !is_valid_covariance(est.param.cov)) ++trace.covariance_violations;
    watch.observe(step.diagnostics.innovation(0), step.diagnostics.state_innovation_cov(0, 0), data.time[k]);

    trace.time.push_back(data.time[k]);
    trace.v_c.push_back(est.state.mean(0));
    trace.soc.push_back(est.state.mean(1));
    trace.q_b.push_back(est.param.mean(0));
    trace.var_v_c.push_back(est.state.cov(0, 0));
    trace.var_soc.push_back(est.state.cov(1, 1));
    trace.var_q_b.push_back(est.param.cov(0, 0));
    trace.v_pred.push_back(step.diagnostics.predicted_output(0));
    trace.v_meas.push_back(data.voltage[k]);
    trace.innovation.push_back(step.diagnostics.innovation(0));
    if (data.has_truth()) trace.soc_true.push_back(data.truth[k].z);
  }
  trace.final_soc = est.state.mean(1);
  trace.final_q_b = est.param.mean(0);
  return trace;
}

/// Which identified values each stage consumed.
struct Provenance {
  double rc_stage_r_s = 0.0;
  EcmParams soc_stage_params;
};

struct SequentialResult {
  double r_s_hat = 0.0;
  double r_t_hat = 0.0;
  double tau_hat = 0.0;
  OhmicTrace ohmic;
  RcTrace rc;
  SocTrace soc;
  Provenance provenance;
};

/// Measured data for the three steps. Each sequence carries absolute time.
struct SequentialData {
  MeasurementSequence ohmic;
  MeasurementSequence rc;
  MeasurementSequence drive;
};

struct EstimationPlan {
  InjectionPlan ohmic = InjectionPlan::ohmic_default();
  InjectionPlan rc = InjectionPlan::rc_default();
  InitialGuess guess;
  EstimatorTuning tuning;
  OcvCurve ocv = OcvCurve::samsung_18650();
  double eta = 0.98;
};

/// Step 1 -> Step 2 (consuming R_s) -> Step 3 (consuming R_s, R_t, tau).
inline SequentialResult estimate_sequential(const SequentialData& data, const EstimationPlan& plan) {
  SequentialResult out;

  auto ohmic = condition(data.ohmic, plan.ohmic.f_3db);
  ohmic = drop_leading(std::move(ohmic), holdup_samples(plan.ohmic.hold_up, data.ohmic.t_s));
  out.ohmic = step1_estimate_rs(ohmic, plan.guess.r_s, plan.tuning);
  out.r_s_hat = out.ohmic.final_r_s;

  const auto rc = condition(data.rc, plan.rc.f_3db);
  out.provenance.rc_stage_r_s = out.r_s_hat;
  out.rc = step2_estimate_rc(rc, holdup_samples(plan.rc.hold_up, data.rc.t_s), out.r_s_hat, plan.guess.r_t,
                             plan.guess.tau, plan.tuning);
  out.r_t_hat = out.rc.final_r_t;
  out.tau_hat = out.rc.final_tau;

  const EcmParams identified{out.r_s_hat, out.r_t_hat, out.tau_hat};
  out.provenance.soc_stage_params = identified;
  out.soc = step3_estimate_soc_soh(data.drive, identified, plan.guess, plan.ocv, plan.eta, plan.tuning);
  return out;
}

struct SequentialScenario {
  CellSpec truth = CellSpec::samsung_18650_20c();
  BatteryState initial_state{0.0, 0.8};
  EstimationPlan plan;
  CurrentProfile drive = drive_cycle_profile(1.0, 3600.0, 1.235, 7);
  double gap_after_ohmic = 87.0; // idle between steps 1 and 2, s
  double gap_after_rc = 13.0;    // idle between steps 2 and 3, s
};

/// Simulated record of a whole sequential run, gaps included.
struct ScenarioRecord {
  SequentialData steps;
  std::vector<MeasurementSequence> segments; // in time order, including idle gaps
};

namespace seed_stream {
inline constexpr std::uint64_t ohmic = 1;
inline constexpr std::uint64_t gap1 = 2;
inline constexpr std::uint64_t rc = 3;
inline constexpr std::uint64_t gap2 = 4;
inline constexpr std::uint64_t drive = 5;
inline constexpr std::uint64_t drive_profile = 6;
inline constexpr std::uint64_t concurrent = 7;
} // namespace seed_stream

inline ScenarioRecord simulate_scenario(const SequentialScenario& sc, std::uint64_t seed) {
  sc.truth.validate();
  ScenarioRecord rec;
  double t = 0.0;
  BatteryState state = sc.initial_state;
  auto run = [&](const CurrentProfile& profile, std::uint64_t stream) {
    auto seq = simulate(sc.truth, profile, state, derive_seed(seed, stream), t);
    state = seq.truth.back();
    t += profile.duration();
    rec.segments.push_back(seq);
    return seq;
  };
  rec.steps.ohmic = run(sc.plan.ohmic.profile(), seed_stream::ohmic);
  if (sc.gap_after_ohmic > 0.0) run(constant_profile(0.0, 1.0, sc.gap_after_ohmic), seed_stream::gap1);
  rec.steps.rc = run(sc.plan.rc.profile(), seed_stream::rc);
  if (sc.gap_after_rc > 0.0) run(constant_profile(0.0, 1.0, sc.gap_after_rc), seed_stream::gap2);
  rec.steps.drive = run(sc.drive, seed_stream::drive);
  return rec;
}

inline SequentialResult run_sequential(const SequentialScenario& sc, std::uint64_t seed) {
  const auto rec = simulate_scenario(sc, seed);
  return estimate_sequential(rec.steps, sc.plan);
}

/// Joint-estimation baseline: trace of the SoC/capacity estimate plus the
/// resistive parameters estimated alongside.
struct ConcurrentResult {
  SocTrace soc;
  std::vector<double> r_s;
  std::vector<double> r_t;
  std::vector<double> tau;
  double r_s_hat = 0.0;
  double r_t_hat = 0.0;
  double tau_hat = 0.0;
};

/// Dual EKF with state [v_c, z] and parameters [R_s, R_t, tau, Q_b]; the
/// parameter filter runs once every `macro_ratio` state steps.
inline ConcurrentResult estimate_concurrent(const MeasurementSequence& data, const InitialGuess& guess,
                                            const OcvCurve& curve, double eta, const EstimatorTuning& tuning) {
  if (data.size() == 0) throw DegenerateExcitation("concurrent", "no samples");
  if (tuning.macro_ratio < 1) throw std::invalid_argument("macro_ratio must be at least 1");
  const auto model = models::joint_model(curve, eta, data.t_s);

  NoiseConfig<2, 4, 1> noise;
  noise.sigma_r.diagonal() << std::pow(tuning.param_walk_rel * guess.r_s, 2),
      std::pow(tuning.param_walk_rel * guess.r_t, 2), std::pow(tuning.param_walk_rel * guess.tau, 2),
      tuning.q_b_walk * tuning.q_b_walk;
  noise.sigma_w.diagonal() << tuning.v_c_walk * tuning.v_c_walk, tuning.soc_walk * tuning.soc_walk;
  noise.sigma_v(0, 0) = tuning.sigma_v * tuning.sigma_v;

  DualEstimate<2, 4> est;
  est.state.mean << guess.v_c, guess.soc;
  est.state.cov = Mat<2, 2>::Zero();
  est.state.cov.diagonal() << tuning.v_c_std * tuning.v_c_std, tuning.soc_std * tuning.soc_std;
  est.param.mean << guess.r_s, guess.r_t, guess.tau, guess.q_b;
  est.param.cov = Mat<4, 4>::Zero();
  est.param.cov.diagonal() << tuning.r_s_std * tuning.r_s_std, tuning.r_t_std * tuning.r_t_std,
      tuning.tau_std * tuning.tau_std, tuning.q_b_std * tuning.q_b_std;

  detail::DivergenceWatch watch(tuning, "concurrent");
  ConcurrentResult out;
  auto& trace = out.soc;
  for (std::size_t k = 0; k < data.size(); ++k) {
    DekfOptions options;
    options.sensitivity = tuning.soc_sensitivity;
    options.update_params = (k + 1) % static_cast<std::size_t>(tuning.macro_ratio) == 0;
    const auto step = dekf_step(est, Vec<1>(data.voltage[k]), Vec<1>(data.current[k]), model, noise, options);
    est = step.estimate;
    if (detail::clamp_state_soc(est.state.mean)) ++trace.clamp_events;
    auto& th = est.param.mean;
    th(0) = std::max(th(0), kResistanceFloor);
    th(1) = std::max(th(1), kResistanceFloor);
    th(2) = std::clamp(th(2), kTauMin, kTauMax);
    th(3) = std::max(th(3), kCapacityFloor);
    if (!is_valid_covariance(est.state.cov) || !is_valid_covariance(est.param.cov)) ++trace.covariance_violations;
    watch.observe(step.diagnostics.innovation(0), step.diagnostics.state_innovation_cov(0, 0), data.time[k]);

    trace.time.push_back(data.time[k]);
    trace.v_c.push_back(est.state.mean(0));
    trace.soc.push_back(est.state.mean(1));
    trace.q_b.push_back(th(3));
    trace.var_v_c.push_back(est.state.cov(0, 0));
    trace.var_soc.push_back(est.state.cov(1, 1));
    trace.var_q_b.push_back(est.param.cov(3, 3));
    trace.v_pred.push_back(step.diagnostics.predicted_output(0));
    trace.v_meas.push_back(data.voltage[k]);
    trace.innovation.push_back(step.diagnostics.innovation(0));
    if (data.has_truth()) trace.soc_true.push_back(data.truth[k].z);
    out.r_s.push_back(th(0));
    out.r_t.push_back(th(1));
    out.tau.push_back(th(2));
  }
  trace.final_soc = est.state.mean(1);
  trace.final_q_b = est.param.mean(3);
  out.r_s_hat = est.param.mean(0);
  out.r_t_hat = est.param.mean(1);
  out.tau_hat = est.param.mean(2);
  return out;
}

/// 0.01 + 0.05 + 0.1 Hz, each at `amplitude`, 1 Hz sampling.
inline CurrentProfile multisine_profile(double duration, double amplitude = 1.235, double t_s = 1.0) {
  return sum_profiles({sine_profile(amplitude, 0.01, t_s, duration), sine_profile(amplitude, 0.05, t_s, duration),
                       sine_profile(amplitude, 0.1, t_s, duration)});
}

struct ConcurrentScenario {
  CellSpec truth = CellSpec::samsung_18650_20c();
  BatteryState initial_state{0.0, 0.8};
  CurrentProfile drive = multisine_profile(3600.0);
  InitialGuess guess;
  EstimatorTuning tuning;
};

inline ConcurrentResult run_concurrent_baseline(const ConcurrentScenario& sc, std::uint64_t seed) {
  sc.truth.validate();
  const auto data = simulate(sc.truth, sc.drive, sc.initial_state, derive_seed(seed, seed_stream::concurrent));
  return estimate_concurrent(data, sc.guess, sc.truth.ocv, sc.truth.eta, sc.tuning);
}

} // namespace seqsoc
