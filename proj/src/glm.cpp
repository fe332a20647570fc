#include "madseq/glm.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "madseq/error.hpp"

namespace madseq {

namespace {

Eigen::VectorXd row_with_intercept(std::span<const double> x) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()) + 1);
  v(0) = 1.0;
  for (std::size_t j = 0; j < x.size(); ++j) v(static_cast<Eigen::Index>(j) + 1) = x[j];
  return v;
}

double inverse_link(GlmFamily f, double eta) {
  return f == GlmFamily::Poisson ? std::exp(eta) : 1.0 / (1.0 + std::exp(-eta));
}

}  // namespace

GlmFit glm_fit_irls(const std::vector<std::vector<double>>& x, std::span<const double> y, GlmFamily family) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (n == 0 || x.size() != y.size()) throw DataError("design and response sizes differ or are empty");
  const auto p = static_cast<Eigen::Index>(x.front().size()) + 1;
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd Y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(x[i].size()) + 1 != p) throw DataError("ragged design matrix");
    X.row(i) = row_with_intercept(x[i]).transpose();
    Y(i) = y[i];
    if (family == GlmFamily::Logistic && y[i] != 0.0 && y[i] != 1.0) throw DataError("logistic response must be 0/1");
    if (family == GlmFamily::Poisson && y[i] < 0.0) throw DataError("Poisson response must be nonnegative");
  }

  GlmFit fit;
  fit.family = family;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  const double ybar = Y.mean();
  if (family == GlmFamily::Poisson)
    beta(0) = std::log(std::max(ybar, 1e-3));
  else
    beta(0) = std::log(std::clamp(ybar, 1e-3, 1 - 1e-3) / (1 - std::clamp(ybar, 1e-3, 1 - 1e-3)));

  Eigen::MatrixXd info(p, p);
  for (int it = 0; it <= kGlmMaxIterations; ++it) {
    const Eigen::VectorXd eta = X * beta;
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu(i) = inverse_link(family, eta(i));
      w(i) = family == GlmFamily::Poisson ? mu(i) : mu(i) * (1.0 - mu(i));
    }
    const Eigen::VectorXd score = X.transpose() * (Y - mu);
    info = X.transpose() * w.asDiagonal() * X;
    fit.score_norm = score.norm();
    fit.iterations = it;
    if (!std::isfinite(fit.score_norm) || !beta.allFinite()) {
      fit.failure = "non-finite iterate";
      break;
    }
    if (fit.score_norm < kGlmScoreTolerance) {
      // Under (quasi-)separation the score vanishes only because fitted means hit the boundary.
      const bool boundary = (w.array() < kGlmBoundaryWeight).any();
      fit.converged = !boundary;
      if (boundary) fit.failure = "separation: fitted means numerically on the boundary";
      break;
    }
    if (it == kGlmMaxIterations) {
      fit.failure = "iteration limit reached (possible separation)";
      break;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
    if (lu.rank() < p) {
      fit.failure = "rank-deficient design";
      break;
    }
    beta += lu.solve(score);
  }

  fit.coefficients.assign(beta.data(), beta.data() + p);
  fit.covariance.assign(p, std::vector<double>(p, 0.0));
  Eigen::FullPivLU<Eigen::MatrixXd> lu(info);
  if (lu.rank() == p) {
    const Eigen::MatrixXd cov = lu.inverse();
    for (Eigen::Index i = 0; i < p; ++i)
      for (Eigen::Index j = 0; j < p; ++j) fit.covariance[i][j] = 0.5 * (cov(i, j) + cov(j, i));
  } else if (fit.failure.empty()) {
    fit.converged = false;
    fit.failure = "singular information matrix";
  }
  return fit;
}

void glm_design(const Dataset& data, std::size_t response, std::vector<std::vector<double>>& x,
                std::vector<double>& y) {
  x.clear();
  y.clear();
  for (const auto& pt : data) {
    if (response >= pt.size()) throw DataError("response index out of range");
    std::vector<double> row;
    row.reserve(pt.size() - 1);
    for (std::size_t j = 0; j < pt.size(); ++j)
      if (j != response) row.push_back(static_cast<double>(pt[j]));
    x.push_back(std::move(row));
    y.push_back(static_cast<double>(pt[response]));
  }
}

double glm_mean(const GlmFit& fit, std::span<const double> x) {
  const Eigen::VectorXd v = row_with_intercept(x);
  if (static_cast<std::size_t>(v.size()) != fit.coefficients.size()) throw DataError("covariate count mismatch");
  const Eigen::Map<const Eigen::VectorXd> beta(fit.coefficients.data(), v.size());
  return inverse_link(fit.family, v.dot(beta));
}

GlmInterval glm_interval(const GlmFit& fit, std::span<const double> x, double level) {
  const Eigen::VectorXd v = row_with_intercept(x);
  const auto p = v.size();
  if (static_cast<std::size_t>(p) != fit.coefficients.size()) throw DataError("covariate count mismatch");
  const Eigen::Map<const Eigen::VectorXd> beta(fit.coefficients.data(), p);
  double var = 0.0;
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j < p; ++j) var += v(i) * fit.covariance[i][j] * v(j);
  const double eta = v.dot(beta);
  const double z = boost::math::quantile(boost::math::normal(), (1.0 + level) / 2.0);
  const double half = z * std::sqrt(std::max(0.0, var));
  return {inverse_link(fit.family, eta), inverse_link(fit.family, eta - half), inverse_link(fit.family, eta + half)};
}

}  // namespace madseq
