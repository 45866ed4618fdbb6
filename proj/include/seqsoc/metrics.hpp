#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>

namespace seqsoc {

/// splitmix64; derives independent per-consumer seeds from one top-level seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// First time t such that |error| <= band for every sample in [t, t + hold].
/// Measured from time.front(); nullopt when the error never settles.
inline std::optional<double> convergence_time(std::span<const double> time, std::span<const double> error, double band,
                                              double hold = 120.0) {
  if (time.size() != error.size()) throw std::invalid_argument("convergence_time: length mismatch");
  std::optional<std::size_t> run_start;
  for (std::size_t k = 0; k < error.size(); ++k) {
    if (std::abs(error[k]) <= band) {
      if (!run_start) run_start = k;
      if (time[k] - time[*run_start] >= hold) return time[*run_start] - time.front();
    } else {
      run_start.reset();
    }
  }
  return std::nullopt;
}

/// Largest |error| from time.front() + after onwards.
inline double max_abs_after(std::span<const double> time, std::span<const double> error, double after) {
  double worst = 0.0;
  for (std::size_t k = 0; k < error.size(); ++k) {
    if (time[k] - time.front() >= after) worst = std::max(worst, std::abs(error[k]));
  }
  return worst;
}

/// Mean |error| over the final `window` seconds.
inline double tail_mean_abs(std::span<const double> time, std::span<const double> error, double window) {
  if (error.empty()) return 0.0;
  const double start = time.back() - window;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t k = 0; k < error.size(); ++k) {
    if (time[k] >= start) {
      sum += std::abs(error[k]);
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

inline double rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("rmse: length mismatch");
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

inline double relative_error(double estimate, double truth) { return (estimate - truth) / truth; }

} // namespace seqsoc
