#include "madseq/asymptotics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>

#include "madseq/error.hpp"
#include "madseq/kernels.hpp"
#include "madseq/parallel.hpp"

namespace madseq {

namespace {

void check_events(const SupportGrid& grid, const EventSet& events) {
  if (events.count() == 0) throw ConfigError("at least one event is required");
  for (const auto& e : events.events)
    if (e.size() != grid.size()) throw ConfigError("event does not match the state's grid");
}

double min_eigen(const Matrix& m) {
  const auto h = static_cast<Eigen::Index>(m.size());
  Eigen::MatrixXd a(h, h);
  for (Eigen::Index i = 0; i < h; ++i)
    for (Eigen::Index j = 0; j < h; ++j) a(i, j) = m[i][j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

}  // namespace

std::vector<double> kernel_event_table(const MadState& state, const EventSet& events) {
  const auto& grid = state.pmf.grid();
  check_events(grid, events);
  const std::size_t h_count = events.count();
  const std::size_t cells = grid.size();
  std::vector<double> out(cells * h_count, 0.0);
  const auto q = state.pmf.probs();
  const MhKernel kernel(grid, state.kernel);

  constexpr std::size_t kChunk = 64;
  const std::size_t chunks = (cells + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t ch) {
    MhKernel::Workspace ws;
    for (std::size_t y = ch * kChunk; y < std::min(cells, (ch + 1) * kChunk); ++y) {
      double* row = &out[y * h_count];
      const auto sw = kernel.sweep(q, y, ws, [&](std::size_t x, double a, double) {
        if (x == y) return;
        for (std::size_t h = 0; h < h_count; ++h)
          if (events.events[h][x]) row[h] += a;
      });
      const double stay = 1.0 - (sw.accepted_total - sw.center_accepted);
      for (std::size_t h = 0; h < h_count; ++h)
        if (events.events[h][y]) row[h] += stay;
    }
  });
  return out;
}

CovEstimate one_step_cov(const MadState& state, const EventSet& events) {
  const std::vector<double> k = kernel_event_table(state, events);
  const std::size_t h_count = events.count();
  const auto p = state.pmf.probs();

  CovEstimate out;
  out.center.assign(h_count, 0.0);
  for (std::size_t h = 0; h < h_count; ++h) out.center[h] = event_probability(state.pmf, events.events[h]);
  out.sigma_n.assign(h_count, std::vector<double>(h_count, 0.0));
  for (std::size_t j = 0; j < h_count; ++j)
    for (std::size_t t = j; t < h_count; ++t) {
      double s = 0.0;
      for (std::size_t y = 0; y < p.size(); ++y) s += k[y * h_count + j] * k[y * h_count + t] * p[y];
      out.sigma_n[j][t] = out.sigma_n[t][j] = s - out.center[j] * out.center[t];
    }
  out.covariance = out.sigma_n;
  out.min_eigenvalue = min_eigen(out.sigma_n);
  out.near_singular = out.min_eigenvalue < kSingularTolerance;
  return out;
}

double rate_r(const WeightSchedule& s, std::int64_t n) {
  if (n < 1) throw PreconditionError("rate needs n >= 1");
  if (s.variant() == WeightSchedule::Variant::Dpm)
    throw PreconditionError("convergence rate is only available for power-law weights");
  const double lambda = s.lambda();
  if (!(lambda > 0.5)) throw PreconditionError("convergence rate needs lambda > 1/2");
  return (2.0 * lambda - 1.0) * std::pow(static_cast<double>(n), 2.0 * lambda - 1.0);
}

CovEstimate gaussian_approx(const MadState& state, const EventSet& events, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("credible level must lie in (0, 1)");
  CovEstimate out = one_step_cov(state, events);
  out.r_n = rate_r(state.schedule, state.n);
  for (auto& row : out.covariance)
    for (auto& v : row) v /= out.r_n;
  const double z = boost::math::quantile(boost::math::normal(), (1.0 + level) / 2.0);
  for (std::size_t h = 0; h < out.center.size(); ++h) {
    const double half = z * std::sqrt(std::max(0.0, out.covariance[h][h]));
    out.intervals.push_back({level, std::clamp(out.center[h] - half, 0.0, 1.0),
                             std::clamp(out.center[h] + half, 0.0, 1.0)});
  }
  return out;
}

}  // namespace madseq
