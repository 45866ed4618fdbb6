#pragma once

// Small fixed-size EKF and dual EKF engines. Filters are plain values and
// every step is a function from estimates to new estimates.
//
// Model (parameters as a random walk):
//   theta_{k} = theta_{k-1} + r
//   X_k       = H(X_{k-1}, theta, u_k) + w
//   Y_k       = G(X_k, theta, u_k) + v

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace seqsoc {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;
template <int R, int C>
using Mat = Eigen::Matrix<double, R, C>;

class SingularInnovation : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Innovation covariances above this condition number are rejected.
inline constexpr double kMaxInnovationCondition = 1e12;

template <int N>
struct GaussianEstimate {
  Vec<N> mean = Vec<N>::Zero();
  Mat<N, N> cov = Mat<N, N>::Identity();

  void symmetrize() { cov = 0.5 * (cov + cov.transpose()).eval(); }
};

template <int NX, int NP, int NY = 1>
struct NoiseConfig {
  Mat<NP, NP> sigma_r = Mat<NP, NP>::Zero(); // parameter random walk
  Mat<NX, NX> sigma_w = Mat<NX, NX>::Zero(); // state process noise
  Mat<NY, NY> sigma_v = Mat<NY, NY>::Identity(); // measurement noise
};

/// User-supplied model. Jacobians not needed by a given filter may be left empty:
/// the parameter-only EKF uses `output` and `output_param_jacobian`; the dual EKF
/// uses all six.
template <int NX, int NP, int NU = 1, int NY = 1>
struct ModelCallbacks {
  static constexpr int state_dim = NX;
  static constexpr int param_dim = NP;
  static constexpr int input_dim = NU;
  static constexpr int output_dim = NY;

  using State = Vec<NX>;
  using Params = Vec<NP>;
  using Input = Vec<NU>;
  using Output = Vec<NY>;

  template <typename R>
  using Fn = std::function<R(const State&, const Params&, const Input&)>;

  Fn<State> transition;                        // H
  Fn<Output> output;                           // G
  Fn<Mat<NX, NX>> transition_state_jacobian;   // A = dH/dX
  Fn<Mat<NX, NP>> transition_param_jacobian;   // dH/dtheta
  Fn<Mat<NY, NX>> output_state_jacobian;       // C_X = dG/dX
  Fn<Mat<NY, NP>> output_param_jacobian;       // partial dG/dtheta at fixed X
};

namespace detail {

template <int NY, int NS>
Mat<NY, NS> solve_innovation(const Mat<NY, NY>& s, const Mat<NY, NS>& rhs) {
  if (!s.allFinite()) {
    throw SingularInnovation("innovation covariance is not finite");
  }
  if constexpr (NY == 1) {
    if (!(s(0, 0) > 0.0)) {
      throw SingularInnovation("innovation variance " + std::to_string(s(0, 0)) + " is not positive");
    }
    return rhs / s(0, 0);
  } else {
    Eigen::JacobiSVD<Mat<NY, NY>> svd(s);
    const auto& sv = svd.singularValues();
    const double smallest = sv(sv.size() - 1);
    if (!(smallest > 0.0) || sv(0) / smallest > kMaxInnovationCondition) {
      throw SingularInnovation("innovation covariance is singular or ill-conditioned");
    }
    return s.ldlt().solve(rhs);
  }
}

template <typename M>
void require_symmetric(const M& m, const char* what) {
  if (((m - m.transpose()).cwiseAbs().maxCoeff()) > 1e-9 * (1.0 + m.cwiseAbs().maxCoeff())) {
    throw DimensionMismatch(std::string(what) + " must be symmetric");
  }
}

} // namespace detail

/// Random-walk prediction: mean unchanged, covariance grows by sigma_r.
template <int NP, int NX, int NY>
GaussianEstimate<NP> ekf_predict(const GaussianEstimate<NP>& est, const NoiseConfig<NX, NP, NY>& noise) {
  GaussianEstimate<NP> out = est;
  out.cov += noise.sigma_r;
  out.symmetrize();
  return out;
}

template <int NP, int NY>
struct EkfUpdate {
  GaussianEstimate<NP> estimate;
  Vec<NY> innovation = Vec<NY>::Zero();
  Mat<NY, NY> innovation_cov = Mat<NY, NY>::Zero();
  Mat<NP, NY> gain = Mat<NP, NY>::Zero();
};

/// Parameter measurement update; (state, input) is the context the output is evaluated in.
template <int NX, int NP, int NU, int NY>
EkfUpdate<NP, NY> ekf_update(const GaussianEstimate<NP>& prior, const Vec<NY>& y,
                             const ModelCallbacks<NX, NP, NU, NY>& model, const NoiseConfig<NX, NP, NY>& noise,
                             const Vec<NX>& state, const Vec<NU>& input) {
  const Mat<NY, NP> c = model.output_param_jacobian(state, prior.mean, input);
  EkfUpdate<NP, NY> out;
  out.innovation = y - model.output(state, prior.mean, input);
  out.innovation_cov = c * prior.cov * c.transpose() + noise.sigma_v;
  out.gain = detail::solve_innovation<NY, NP>(out.innovation_cov, (c * prior.cov).eval()).transpose();
  out.estimate.mean = prior.mean + out.gain * out.innovation;
  out.estimate.cov = (Mat<NP, NP>::Identity() - out.gain * c) * prior.cov;
  out.estimate.symmetrize();
  return out;
}

/// How dX^-/dtheta is formed for the parameter filter's total derivative.
enum class Sensitivity {
  one_step,  // dH/dtheta at the previous posterior only
  recursive, // also carries dX_{k-1}/dtheta through A and the state gain
};

template <int NX, int NP>
struct DualEstimate {
  GaussianEstimate<NP> param;
  GaussianEstimate<NX> state;
  Mat<NX, NP> state_sensitivity = Mat<NX, NP>::Zero(); // dX_hat/dtheta (recursive mode)
};

template <int NX, int NP, int NY>
struct DekfDiagnostics {
  Vec<NX> state_prior = Vec<NX>::Zero();
  Vec<NY> innovation = Vec<NY>::Zero();
  Mat<NY, NY> state_innovation_cov = Mat<NY, NY>::Zero();
  Mat<NY, NY> param_innovation_cov = Mat<NY, NY>::Zero();
  Mat<NY, NP> param_jacobian = Mat<NY, NP>::Zero(); // total C_theta used
  Vec<NY> predicted_output = Vec<NY>::Zero();
  bool param_updated = false;
};

template <int NX, int NP, int NY>
struct DekfStep {
  DualEstimate<NX, NP> estimate;
  DekfDiagnostics<NX, NP, NY> diagnostics;
};

struct DekfOptions {
  Sensitivity sensitivity = Sensitivity::one_step;
  bool update_params = true; // false skips parameter predict and update this step
};

/// One dual-EKF step in the order: parameter predict, state predict, state update,
/// parameter update. Both updates use the innovation at (X^-, theta^-).
template <int NX, int NP, int NU, int NY>
DekfStep<NX, NP, NY> dekf_step(const DualEstimate<NX, NP>& prev, const Vec<NY>& y, const Vec<NU>& u,
                               const ModelCallbacks<NX, NP, NU, NY>& model, const NoiseConfig<NX, NP, NY>& noise,
                               const DekfOptions& options = {}) {
  using StateMat = Mat<NX, NX>;
  DekfStep<NX, NP, NY> out;
  auto& diag = out.diagnostics;
  diag.param_updated = options.update_params;

  // Parameter prediction.
  GaussianEstimate<NP> param_prior = prev.param;
  if (options.update_params) {
    param_prior.cov += noise.sigma_r;
    param_prior.symmetrize();
  }
  const Vec<NP>& theta = param_prior.mean;

  // State prediction.
  GaussianEstimate<NX> state_prior;
  state_prior.mean = model.transition(prev.state.mean, theta, u);
  const StateMat a = model.transition_state_jacobian(state_prior.mean, theta, u);
  state_prior.cov = a * prev.state.cov * a.transpose() + noise.sigma_w;
  state_prior.symmetrize();
  diag.state_prior = state_prior.mean;

  // Output at the prior, shared by both updates.
  const Vec<NY> predicted = model.output(state_prior.mean, theta, u);
  diag.predicted_output = predicted;
  diag.innovation = y - predicted;
  const Mat<NY, NX> c_x = model.output_state_jacobian(state_prior.mean, theta, u);

  // State update.
  diag.state_innovation_cov = c_x * state_prior.cov * c_x.transpose() + noise.sigma_v;
  const Mat<NX, NY> k_x =
      detail::solve_innovation<NY, NX>(diag.state_innovation_cov, (c_x * state_prior.cov).eval()).transpose();
  out.estimate.state.mean = state_prior.mean + k_x * diag.innovation;
  out.estimate.state.cov = (StateMat::Identity() - k_x * c_x) * state_prior.cov;
  out.estimate.state.symmetrize();

  // Total derivative of G(X^-(theta), theta, u).
  Mat<NX, NP> dx_prior = model.transition_param_jacobian(prev.state.mean, theta, u);
  if (options.sensitivity == Sensitivity::recursive) {
    dx_prior += a * prev.state_sensitivity;
  }
  const Mat<NY, NP> dg_direct = model.output_param_jacobian(state_prior.mean, theta, u);
  const Mat<NY, NP> c_theta = dg_direct + c_x * dx_prior;
  diag.param_jacobian = c_theta;
  if (options.sensitivity == Sensitivity::recursive) {
    out.estimate.state_sensitivity = (StateMat::Identity() - k_x * c_x) * dx_prior - k_x * dg_direct;
  }

  // Parameter update.
  if (options.update_params) {
    diag.param_innovation_cov = c_theta * param_prior.cov * c_theta.transpose() + noise.sigma_v;
    const Mat<NP, NY> k_theta =
        detail::solve_innovation<NY, NP>(diag.param_innovation_cov, (c_theta * param_prior.cov).eval()).transpose();
    out.estimate.param.mean = param_prior.mean + k_theta * diag.innovation;
    out.estimate.param.cov = (Mat<NP, NP>::Identity() - k_theta * c_theta) * param_prior.cov;
    out.estimate.param.symmetrize();
  } else {
    out.estimate.param = param_prior;
  }
  return out;
}

/// Symmetric within `tol` and no eigenvalue below -tol.
template <int N>
bool is_valid_covariance(const Mat<N, N>& cov, double tol = 1e-10) {
  if (!cov.allFinite()) return false;
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > tol) return false;
  Eigen::SelfAdjointEigenSolver<Mat<N, N>> eig(cov, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() >= -tol;
}

} // namespace seqsoc
