#pragma once

#include <span>
#include <string>
#include <vector>

#include "madseq/predictive.hpp"

namespace madseq {

enum class GlmFamily { Poisson, Logistic };

struct GlmFit {
  GlmFamily family = GlmFamily::Poisson;
  std::vector<double> coefficients;             ///< intercept first
  std::vector<std::vector<double>> covariance;  ///< inverse Fisher information at the fit
  bool converged = false;
  int iterations = 0;
  double score_norm = 0.0;
  std::string failure;  ///< empty unless the fit is flagged
};

struct GlmInterval {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

inline constexpr double kGlmScoreTolerance = 1e-8;
inline constexpr int kGlmMaxIterations = 100;
/// IRLS weights below this at the solution flag separation.
inline constexpr double kGlmBoundaryWeight = 1e-8;

/// Iteratively reweighted least squares. `x` holds one covariate row per observation
/// (the intercept is added). Rank deficiency, non-finite iterates or exhausting the
/// iteration budget flag the fit instead of throwing.
GlmFit glm_fit_irls(const std::vector<std::vector<double>>& x, std::span<const double> y, GlmFamily family);

/// Splits points into covariate rows (all coordinates except `response`) and responses.
void glm_design(const Dataset& data, std::size_t response, std::vector<std::vector<double>>& x,
                std::vector<double>& y);

double glm_mean(const GlmFit& fit, std::span<const double> x);

/// Wald interval for eta pushed through the inverse link.
GlmInterval glm_interval(const GlmFit& fit, std::span<const double> x, double level = 0.95);

}  // namespace madseq
