#pragma once

// Model callbacks for each estimation stage.

#include <cmath>

#include "seqsoc/cell_model.hpp"
#include "seqsoc/estimators.hpp"

namespace seqsoc::models {

/// Filtered ohmic stage: v_bf = -R_s * i_bf. The state slot is unused.
using OhmicModel = ModelCallbacks<1, 1, 1, 1>;

inline OhmicModel ohmic_model() {
  OhmicModel m;
  m.transition = [](const Vec<1>& x, const Vec<1>&, const Vec<1>&) { return x; };
  m.output = [](const Vec<1>&, const Vec<1>& th, const Vec<1>& u) { return Vec<1>(-th(0) * u(0)); };
  m.transition_state_jacobian = [](const Vec<1>&, const Vec<1>&, const Vec<1>&) { return Mat<1, 1>::Identity(); };
  m.transition_param_jacobian = [](const Vec<1>&, const Vec<1>&, const Vec<1>&) { return Mat<1, 1>::Zero(); };
  m.output_state_jacobian = [](const Vec<1>&, const Vec<1>&, const Vec<1>&) { return Mat<1, 1>::Zero(); };
  m.output_param_jacobian = [](const Vec<1>&, const Vec<1>&, const Vec<1>& u) { return Mat<1, 1>(-u(0)); };
  return m;
}

/// Bilinear-discretized RC branch driven by the filtered current.
///   state  = [i2(k-1), i_bf(k-1)], input = i_bf(k), params = [R_t, tau]
///   i2(k)  = Ts/(Ts+2tau) * (i_bf(k) + i_bf(k-1)) - (Ts-2tau)/(Ts+2tau) * i2(k-1)
///   v_bf   = -R_s_hat * i_bf(k) - R_t * i2(k)
/// The transition advances the memory so the next step sees [i2(k), i_bf(k)].
using RcModel = ModelCallbacks<2, 2, 1, 1>;

struct BilinearRc {
  double t_s = 1.0;

  double forward_gain(double tau) const { return t_s / (t_s + 2.0 * tau); }
  double pole(double tau) const { return -(t_s - 2.0 * tau) / (t_s + 2.0 * tau); }

  double i2(double tau, double i2_prev, double ibf_prev, double ibf) const {
    return forward_gain(tau) * (ibf + ibf_prev) + pole(tau) * i2_prev;
  }
  /// d i2(k) / d tau holding i2(k-1) fixed.
  double di2_dtau(double tau, double i2_prev, double ibf_prev, double ibf) const {
    return 2.0 * (i2_prev - i2(tau, i2_prev, ibf_prev, ibf)) / (t_s + 2.0 * tau);
  }
};

inline RcModel rc_model(double r_s_hat, double t_s) {
  const BilinearRc rc{t_s};
  RcModel m;
  m.transition = [rc](const Vec<2>& x, const Vec<2>& th, const Vec<1>& u) {
    return Vec<2>(rc.i2(th(1), x(0), x(1), u(0)), u(0));
  };
  m.output = [rc, r_s_hat](const Vec<2>& x, const Vec<2>& th, const Vec<1>& u) {
    return Vec<1>(-r_s_hat * u(0) - th(0) * rc.i2(th(1), x(0), x(1), u(0)));
  };
  m.transition_state_jacobian = [rc](const Vec<2>&, const Vec<2>& th, const Vec<1>&) {
    Mat<2, 2> a;
    a << rc.pole(th(1)), rc.forward_gain(th(1)), 0.0, 0.0;
    return a;
  };
  m.transition_param_jacobian = [rc](const Vec<2>& x, const Vec<2>& th, const Vec<1>& u) {
    Mat<2, 2> j = Mat<2, 2>::Zero();
    j(0, 1) = rc.di2_dtau(th(1), x(0), x(1), u(0));
    return j;
  };
  m.output_state_jacobian = [rc](const Vec<2>&, const Vec<2>& th, const Vec<1>&) {
    Mat<1, 2> c;
    c << -th(0) * rc.pole(th(1)), -th(0) * rc.forward_gain(th(1));
    return c;
  };
  m.output_param_jacobian = [rc](const Vec<2>& x, const Vec<2>& th, const Vec<1>& u) {
    Mat<1, 2> c;
    c << -rc.i2(th(1), x(0), x(1), u(0)), -th(0) * rc.di2_dtau(th(1), x(0), x(1), u(0));
    return c;
  };
  return m;
}

/// SoC/capacity stage: state [v_c, z], parameter [Q_b] (Ah), input i_b.
///   v_c(k) = e^{-Ts/tau} v_c(k-1) + R_t (1 - e^{-Ts/tau}) i_b(k)
///   z(k)   = z(k-1) - eta*Ts/(3600 Q_b) i_b(k)
///   v_b(k) = OCV(z(k)) - v_c(k) - R_s i_b(k)
using SocModel = ModelCallbacks<2, 1, 1, 1>;

inline SocModel soc_model(const EcmParams& ecm, const OcvCurve& curve, double eta, double t_s,
                          double guard = kDefaultSocGuard) {
  const double p = std::exp(-t_s / ecm.tau);
  const double coulomb = eta * t_s / kSecondsPerHour;
  SocModel m;
  m.transition = [=](const Vec<2>& x, const Vec<1>& th, const Vec<1>& u) {
    return Vec<2>(p * x(0) + ecm.r_t * (1.0 - p) * u(0), x(1) - coulomb * u(0) / th(0));
  };
  m.output = [=](const Vec<2>& x, const Vec<1>&, const Vec<1>& u) {
    return Vec<1>(ocv(curve, clamp_soc(x(1), guard), guard) - x(0) - ecm.r_s * u(0));
  };
  m.transition_state_jacobian = [=](const Vec<2>&, const Vec<1>&, const Vec<1>&) {
    Mat<2, 2> a;
    a << p, 0.0, 0.0, 1.0;
    return a;
  };
  m.transition_param_jacobian = [=](const Vec<2>&, const Vec<1>& th, const Vec<1>& u) {
    return Mat<2, 1>(0.0, coulomb * u(0) / (th(0) * th(0)));
  };
  m.output_state_jacobian = [=](const Vec<2>& x, const Vec<1>&, const Vec<1>&) {
    Mat<1, 2> c;
    c << -1.0, ocv_slope(curve, clamp_soc(x(1), guard), guard);
    return c;
  };
  m.output_param_jacobian = [](const Vec<2>&, const Vec<1>&, const Vec<1>&) { return Mat<1, 1>::Zero(); };
  return m;
}

/// Joint model for the concurrent baseline: parameters [R_s, R_t, tau, Q_b].
using JointModel = ModelCallbacks<2, 4, 1, 1>;

inline JointModel joint_model(const OcvCurve& curve, double eta, double t_s, double guard = kDefaultSocGuard) {
  const double coulomb = eta * t_s / kSecondsPerHour;
  JointModel m;
  m.transition = [=](const Vec<2>& x, const Vec<4>& th, const Vec<1>& u) {
    const double p = std::exp(-t_s / th(2));
    return Vec<2>(p * x(0) + th(1) * (1.0 - p) * u(0), x(1) - coulomb * u(0) / th(3));
  };
  m.output = [=](const Vec<2>& x, const Vec<4>& th, const Vec<1>& u) {
    return Vec<1>(ocv(curve, clamp_soc(x(1), guard), guard) - x(0) - th(0) * u(0));
  };
  m.transition_state_jacobian = [=](const Vec<2>&, const Vec<4>& th, const Vec<1>&) {
    Mat<2, 2> a;
    a << std::exp(-t_s / th(2)), 0.0, 0.0, 1.0;
    return a;
  };
  m.transition_param_jacobian = [=](const Vec<2>& x, const Vec<4>& th, const Vec<1>& u) {
    const double p = std::exp(-t_s / th(2));
    const double dp_dtau = p * t_s / (th(2) * th(2));
    Mat<2, 4> j = Mat<2, 4>::Zero();
    j(0, 1) = (1.0 - p) * u(0);
    j(0, 2) = dp_dtau * (x(0) - th(1) * u(0));
    j(1, 3) = coulomb * u(0) / (th(3) * th(3));
    return j;
  };
  m.output_state_jacobian = [=](const Vec<2>& x, const Vec<4>&, const Vec<1>&) {
    Mat<1, 2> c;
    c << -1.0, ocv_slope(curve, clamp_soc(x(1), guard), guard);
    return c;
  };
  m.output_param_jacobian = [](const Vec<2>&, const Vec<4>&, const Vec<1>& u) {
    Mat<1, 4> c = Mat<1, 4>::Zero();
    c(0, 0) = -u(0);
    return c;
  };
  return m;
}

} // namespace seqsoc::models
