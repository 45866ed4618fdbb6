#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace seqsoc {

/// First-order Butterworth high-pass, bilinear transform prewarped at f_3db:
///   y[n] = b0*x[n] + b1*x[n-1] - a1*y[n-1],  b1 == -b0 so the DC gain is exactly zero.
class HighPassFilter {
public:
  enum class Start {
    seed_first_input, // previous input := first sample, so the first output is 0
    at_rest,          // previous input and output are 0 (causal system at rest)
  };

  HighPassFilter() = default;

  static HighPassFilter design(double f_3db, double t_s, Start start = Start::seed_first_input) {
    if (!(t_s > 0.0)) {
      throw std::invalid_argument("filter sample period must be positive");
    }
    if (!(f_3db > 0.0 && f_3db < 0.5 / t_s)) {
      throw std::invalid_argument("3 dB frequency " + std::to_string(f_3db) + " Hz outside (0, Nyquist) for t_s=" +
                                  std::to_string(t_s));
    }
    HighPassFilter f;
    f.f_3db_ = f_3db;
    f.t_s_ = t_s;
    f.start_ = start;
    const double c = std::tan(std::numbers::pi * f_3db * t_s);
    f.b0_ = 1.0 / (1.0 + c);
    f.b1_ = -f.b0_;
    f.a1_ = (c - 1.0) / (1.0 + c);
    return f;
  }

  /// Filter for the analysis time constant T_c = 1/(2*pi*f_3db).
  static HighPassFilter from_time_constant(double t_c, double t_s, Start start = Start::seed_first_input) {
    if (!(t_c > 0.0)) throw std::invalid_argument("filter time constant must be positive");
    return design(1.0 / (2.0 * std::numbers::pi * t_c), t_s, start);
  }

  double operator()(double x) {
    if (!primed_) {
      primed_ = true;
      prev_in_ = start_ == Start::seed_first_input ? x : 0.0;
      prev_out_ = 0.0;
    }
    const double y = b0_ * x + b1_ * prev_in_ - a1_ * prev_out_;
    prev_in_ = x;
    prev_out_ = y;
    return y;
  }

  std::vector<double> filter(std::span<const double> xs) {
    std::vector<double> out;
    out.reserve(xs.size());
    for (double x : xs) out.push_back((*this)(x));
    return out;
  }

  void reset() { primed_ = false; }

  /// Complex frequency response at f hertz.
  std::complex<double> response(double f) const {
    const auto zinv = std::polar(1.0, -2.0 * std::numbers::pi * f * t_s_);
    return (b0_ + b1_ * zinv) / (1.0 + a1_ * zinv);
  }
  double gain(double f) const { return std::abs(response(f)); }

  double f_3db() const { return f_3db_; }
  double t_s() const { return t_s_; }
  double time_constant() const { return 1.0 / (2.0 * std::numbers::pi * f_3db_); }
  double b0() const { return b0_; }
  double b1() const { return b1_; }
  double a1() const { return a1_; }

private:
  double f_3db_ = 0.0;
  double t_s_ = 0.0;
  Start start_ = Start::seed_first_input;
  double b0_ = 0.0;
  double b1_ = 0.0;
  double a1_ = 0.0;
  double prev_in_ = 0.0;
  double prev_out_ = 0.0;
  bool primed_ = false;
};

inline HighPassFilter design_highpass(double f_3db, double t_s) { return HighPassFilter::design(f_3db, t_s); }

} // namespace seqsoc
