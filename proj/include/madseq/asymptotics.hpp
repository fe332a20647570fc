#pragma once

#include <cstdint>
#include <vector>

#include "madseq/grid.hpp"
#include "madseq/predictive.hpp"
#include "madseq/resampling.hpp"
#include "madseq/weights.hpp"

namespace madseq {

using Matrix = std::vector<std::vector<double>>;

/// Plug-in summary of the asymptotic posterior of (P(A_1), ..., P(A_H)).
struct CovEstimate {
  Matrix sigma_n;              ///< one-step covariance Sigma_n
  double r_n = 1.0;            ///< rate; 1 when only Sigma_n was requested
  std::vector<double> center;  ///< P_n(A_h)
  Matrix covariance;           ///< Sigma_n / r_n
  std::vector<CredibleInterval> intervals;
  double min_eigenvalue = 0.0;
  bool near_singular = false;  ///< min eigenvalue below kSingularTolerance
};

inline constexpr double kSingularTolerance = 1e-8;

/// K(A_h | y) for every cell y (row-major: out[y * H + h]).
std::vector<double> kernel_event_table(const MadState& state, const EventSet& events);

/// Sigma_jt = sum_y K(A_j|y) K(A_t|y) p_n(y) - P_n(A_j) P_n(A_t), by exact summation.
CovEstimate one_step_cov(const MadState& state, const EventSet& events);

/// r_n = (2 lambda - 1) n^(2 lambda - 1); Adaptive schedules use their limiting lambda.
double rate_r(const WeightSchedule& s, std::int64_t n);

/// Gaussian approximation N(P_n(A), Sigma_n / r_n) with marginal intervals clipped to [0, 1].
CovEstimate gaussian_approx(const MadState& state, const EventSet& events, double level = 0.95);

}  // namespace madseq
