#include "madseq/resampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "madseq/error.hpp"
#include "madseq/parallel.hpp"

namespace madseq {

namespace {

constexpr std::size_t kBlockShift = 8;
constexpr double kRescaleFloor = 1e-100;
constexpr std::int64_t kResumEvery = 4096;

std::size_t sample_dense(std::span<const double> p, double u) {
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  const double target = u * total;
  double cum = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    cum += p[i];
    last = i;
    if (cum > target) return i;
  }
  return last;
}

// p = s * q with q updated only over the proposal box of each step.
class LazyTrajectory {
 public:
  explicit LazyTrajectory(std::span<const double> p) : q_(p.begin(), p.end()) {
    blocks_.assign(((q_.size() - 1) >> kBlockShift) + 1, 0.0);
    resum();
  }

  std::size_t sample(double u) const {
    double total = 0.0;
    for (double b : blocks_) total += b;
    const double target = u * total;
    double cum = 0.0;
    std::size_t k = 0;
    for (; k + 1 < blocks_.size(); ++k) {
      if (cum + blocks_[k] > target) break;
      cum += blocks_[k];
    }
    const std::size_t lo = k << kBlockShift;
    const std::size_t hi = std::min(q_.size(), lo + (std::size_t{1} << kBlockShift));
    std::size_t last = lo;
    for (std::size_t i = lo; i < hi; ++i) {
      if (q_[i] <= 0.0) continue;
      cum += q_[i];
      last = i;
      if (cum > target) return i;
    }
    return last;
  }

  void prepare(double w) {
    if (s_ * (1.0 - w) < kRescaleFloor || ++since_resum_ >= kResumEvery) {
      if (s_ * (1.0 - w) < kRescaleFloor) {
        const double total = std::accumulate(q_.begin(), q_.end(), 0.0);
        for (auto& v : q_) v /= total;
        s_ = 1.0;
      }
      resum();
    }
  }

  void dp_step(std::size_t c, double w) {
    prepare(w);
    s_ *= 1.0 - w;
    add(c, w / s_);
  }

  void mad_step(const MhKernel& kernel, MhKernel::Workspace& ws, std::size_t c, double w) {
    prepare(w);
    const double s_new = s_ * (1.0 - w);
    const double scale = w / s_new;
    const auto sw = kernel.sweep(q_, c, ws, [&](std::size_t y, double a, double) {
      if (y != c) add(y, scale * a);
    });
    add(c, scale * (1.0 - (sw.accepted_total - sw.center_accepted)));
    s_ = s_new;
  }

  std::vector<double> finish() && {
    const double total = std::accumulate(q_.begin(), q_.end(), 0.0);
    for (auto& v : q_) v /= total;
    return std::move(q_);
  }

 private:
  void add(std::size_t i, double v) {
    q_[i] += v;
    blocks_[i >> kBlockShift] += v;
  }

  void resum() {
    std::fill(blocks_.begin(), blocks_.end(), 0.0);
    for (std::size_t i = 0; i < q_.size(); ++i) blocks_[i >> kBlockShift] += q_[i];
    since_resum_ = 0;
  }

  std::vector<double> q_;
  std::vector<double> blocks_;
  double s_ = 1.0;
  std::int64_t since_resum_ = 0;
};

bool all_point_mass(const BaseKernelSpec& spec) {
  return std::all_of(spec.coords.begin(), spec.coords.end(),
                     [](const CoordKernel& k) { return std::holds_alternative<PointMass>(k); });
}

std::vector<double> mad_trajectory(const MadState& state, const MhKernel* kernel, std::int64_t horizon, Rng& rng) {
  const auto probs = state.pmf.probs();
  if (horizon == state.n) return {probs.begin(), probs.end()};
  LazyTrajectory traj(probs);
  MhKernel::Workspace ws;
  for (std::int64_t i = state.n + 1; i <= horizon; ++i) {
    const std::size_t c = traj.sample(rng.uniform());
    const double w = state.schedule.at(i);
    if (kernel)
      traj.mad_step(*kernel, ws, c, w);
    else
      traj.dp_step(c, w);
  }
  return std::move(traj).finish();
}

std::vector<double> copula_trajectory(CopulaState state, std::int64_t horizon, Rng& rng) {
  const auto& grid = state.grid();
  if (horizon == state.n()) {
    const Pmf p = state.joint();
    return {p.probs().begin(), p.probs().end()};
  }
  std::vector<double> p(grid.size());
  Point y;
  while (state.n() < horizon) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = state.probability(grid.unflatten(i));
    y = grid.unflatten(sample_dense(p, rng.uniform()));
    state.update_in_place(y);
  }
  const Pmf out = state.joint();
  return {out.probs().begin(), out.probs().end()};
}

void check_config(const PredictiveState& state, const ResampleConfig& cfg) {
  if (cfg.draws < 1) throw ConfigError("resampling needs at least one draw");
  if (cfg.horizon < state_n(state)) throw ConfigError("resampling horizon must not be below the number of observations");
}

}  // namespace

std::vector<double> resample_trajectory(const PredictiveState& state, std::int64_t horizon, Rng& rng) {
  if (const auto* mad = std::get_if<MadState>(&state)) {
    if (all_point_mass(mad->kernel)) return mad_trajectory(*mad, nullptr, horizon, rng);
    const MhKernel kernel(mad->pmf.grid(), mad->kernel);
    return mad_trajectory(*mad, &kernel, horizon, rng);
  }
  return copula_trajectory(std::get<CopulaState>(state), horizon, rng);
}

PosteriorDraws predictive_resample(const PredictiveState& state, const ResampleConfig& cfg,
                                   const DrawReducer& reducer) {
  check_config(state, cfg);
  PosteriorDraws out;
  out.config = cfg;
  out.start_n = state_n(state);
  std::vector<std::vector<double>> results(cfg.draws);

  const MadState* mad = std::get_if<MadState>(&state);
  std::optional<MhKernel> kernel;
  if (mad) {
    out.grid = mad->pmf.grid();
    if (!all_point_mass(mad->kernel)) kernel.emplace(out.grid, mad->kernel);
  } else {
    out.grid = std::get<CopulaState>(state).grid();
  }

  parallel_for(cfg.draws, [&](std::size_t b) {
    Rng rng(derive_seed(cfg.seed, b));
    std::vector<double> p = mad ? mad_trajectory(*mad, kernel ? &*kernel : nullptr, cfg.horizon, rng)
                                : copula_trajectory(std::get<CopulaState>(state), cfg.horizon, rng);
    results[b] = reducer ? reducer(p) : std::move(p);
  });
  (reducer ? out.values : out.pmfs) = std::move(results);
  return out;
}

double sample_quantile(std::vector<double> samples, double u) {
  if (samples.empty()) throw PreconditionError("quantile of an empty sample");
  if (!(u >= 0.0 && u <= 1.0)) throw ConfigError("quantile level must lie in [0, 1]");
  std::sort(samples.begin(), samples.end());
  const double h = static_cast<double>(samples.size() - 1) * u;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, samples.size() - 1);
  return samples[lo] + (h - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

FunctionalPosterior summarize_samples(std::vector<double> samples, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("credible level must lie in (0, 1)");
  if (samples.empty()) throw PreconditionError("no posterior samples");
  FunctionalPosterior out;
  const auto count = static_cast<double>(samples.size());
  out.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / count;
  double ss = 0.0;
  for (double v : samples) ss += (v - out.mean) * (v - out.mean);
  out.sd = samples.size() > 1 ? std::sqrt(ss / (count - 1.0)) : 0.0;
  out.interval.level = level;
  out.interval.lower = sample_quantile(samples, (1.0 - level) / 2.0);
  out.interval.upper = sample_quantile(samples, (1.0 + level) / 2.0);
  out.samples = std::move(samples);
  return out;
}

FunctionalPosterior posterior_functional(const PosteriorDraws& draws, const Functional& f, double level) {
  if (!draws.has_pmfs()) throw ConfigError("draws do not store pmfs");
  if (f.values.size() != draws.grid.size()) throw ConfigError("functional does not match the draws' grid");
  std::vector<double> theta;
  theta.reserve(draws.pmfs.size());
  for (const auto& p : draws.pmfs) theta.push_back(std::inner_product(p.begin(), p.end(), f.values.begin(), 0.0));
  return summarize_samples(std::move(theta), level);
}

FunctionalPosterior posterior_value(const PosteriorDraws& draws, std::size_t j, double level) {
  if (draws.has_pmfs()) throw ConfigError("draws store pmfs, not reduced values");
  std::vector<double> v;
  v.reserve(draws.values.size());
  for (const auto& row : draws.values) {
    if (j >= row.size()) throw ConfigError("reduced value index out of range");
    v.push_back(row[j]);
  }
  return summarize_samples(std::move(v), level);
}

double pmf_correlation(std::span<const double> p, const Functional& f1, const Functional& f2) {
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    m1 += p[i] * f1.values[i];
    m2 += p[i] * f2.values[i];
  }
  double v1 = 0.0, v2 = 0.0, c12 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d1 = f1.values[i] - m1, d2 = f2.values[i] - m2;
    v1 += p[i] * d1 * d1;
    v2 += p[i] * d2 * d2;
    c12 += p[i] * d1 * d2;
  }
  if (!(v1 > 0.0) || !(v2 > 0.0)) return std::nan("");
  return c12 / std::sqrt(v1 * v2);
}

PairCorrelation posterior_pair_correlation(const PosteriorDraws& draws, const Functional& f1,
                                           const Functional& f2) {
  if (!draws.has_pmfs()) throw ConfigError("draws do not store pmfs");
  if (f1.values.size() != draws.grid.size() || f2.values.size() != draws.grid.size())
    throw ConfigError("functional does not match the draws' grid");
  PairCorrelation out;
  for (const auto& p : draws.pmfs) {
    const double r = pmf_correlation(p, f1, f2);
    if (std::isnan(r))
      ++out.undefined;
    else
      out.samples.push_back(r);
  }
  if (!out.samples.empty())
    out.mean = std::accumulate(out.samples.begin(), out.samples.end(), 0.0) / static_cast<double>(out.samples.size());
  return out;
}

void write_draws_csv(std::ostream& out, const PosteriorDraws& draws) {
  const auto& rows = draws.has_pmfs() ? draws.pmfs : draws.values;
  const std::size_t cols = rows.empty() ? 0 : rows.front().size();
  const char* prefix = draws.has_pmfs() ? "cell" : "value";
  out << "draw";
  for (std::size_t j = 0; j < cols; ++j) out << ',' << prefix << j;
  out << '\n';
  const auto old = out.precision(17);
  for (std::size_t b = 0; b < rows.size(); ++b) {
    out << b;
    for (double v : rows[b]) out << ',' << v;
    out << '\n';
  }
  out.precision(old);
}

}  // namespace madseq
