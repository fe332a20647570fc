#include "madseq/predictive.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "madseq/error.hpp"
#include "madseq/parallel.hpp"
#include "madseq/rng.hpp"

namespace madseq {

namespace {

void require_positive(const Pmf& p0) {
  for (double v : p0.probs())
    if (!(v > 0.0)) throw ConfigError("base measure p0 must be strictly positive");
}

// In-place MAD step on a dense table; returns log p_{n}(y) before the update.
double mad_step(std::vector<double>& p, const MhKernel& kernel, MhKernel::Workspace& ws, std::vector<double>& row,
                std::size_t c, double w) {
  const double before = p[c];
  kernel.row(p, c, ws, row);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = (1.0 - w) * p[i] + w * row[i];
    sum += p[i];
  }
  if (!(std::abs(sum - 1.0) <= 1e-9)) throw NumericalError("pre-normalization mass drifted from one");
  for (auto& v : p) v /= sum;
  return std::log(before);
}

double dp_step(std::vector<double>& p, std::size_t c, double w) {
  const double before = p[c];
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] *= 1.0 - w;
    if (i == c) p[i] += w;
    sum += p[i];
  }
  if (!(std::abs(sum - 1.0) <= 1e-9)) throw NumericalError("pre-normalization mass drifted from one");
  for (auto& v : p) v /= sum;
  return std::log(before);
}

bool all_point_mass(const BaseKernelSpec& spec) {
  return std::all_of(spec.coords.begin(), spec.coords.end(),
                     [](const CoordKernel& k) { return std::holds_alternative<PointMass>(k); });
}

}  // namespace

MadState make_mad_state(Pmf p0, BaseKernelSpec kernel, WeightSchedule schedule) {
  validate_kernel(kernel, p0.grid());
  require_positive(p0);
  return MadState{std::move(p0), 0, std::move(kernel), schedule};
}

MadState make_dp_state(Pmf p0, double alpha) {
  const std::size_t d = p0.grid().arity();
  return make_mad_state(std::move(p0), BaseKernelSpec::point_mass(d), WeightSchedule::power_law(alpha, 1.0));
}

bool is_dp(const MadState& state) {
  return all_point_mass(state.kernel) && state.schedule.variant() == WeightSchedule::Variant::PowerLaw &&
         state.schedule.lambda() == 1.0;
}

MadState mad_update(const MadState& state, std::span<const std::int64_t> y) {
  return mad_update(state, MhKernel(state.pmf.grid(), state.kernel), y);
}

MadState mad_update(const MadState& state, const MhKernel& kernel, std::span<const std::int64_t> y) {
  const auto& grid = state.pmf.grid();
  if (!(kernel.grid() == grid)) throw ConfigError("kernel grid does not match state grid");
  if (!grid.contains(y)) throw DataError("observation is outside the grid");
  const std::size_t c = grid.flatten(y);
  std::vector<double> p(state.pmf.probs().begin(), state.pmf.probs().end());
  std::vector<double> row;
  MhKernel::Workspace ws;
  mad_step(p, kernel, ws, row, c, state.schedule.at(state.n + 1));
  return MadState{Pmf(grid, std::move(p)), state.n + 1, state.kernel, state.schedule};
}

MadState dp_update(const MadState& state, std::span<const std::int64_t> y) {
  const auto& grid = state.pmf.grid();
  if (!grid.contains(y)) throw DataError("observation is outside the grid");
  std::vector<double> p(state.pmf.probs().begin(), state.pmf.probs().end());
  dp_step(p, grid.flatten(y), state.schedule.at(state.n + 1));
  return MadState{Pmf(grid, std::move(p)), state.n + 1, state.kernel, state.schedule};
}

std::string method_name(const Method& m) {
  std::ostringstream os;
  os.precision(17);
  if (const auto* mad = std::get_if<MadMethod>(&m)) {
    os << "mad[" << describe(mad->kernel) << "; " << mad->schedule.name() << "]";
  } else if (const auto* dp = std::get_if<DpMethod>(&m)) {
    os << "dp[alpha=" << dp->alpha << "]";
  } else {
    const auto& cop = std::get<CopulaMethod>(m).config;
    os << "copula[rho=" << cop.rho << "; " << cop.schedule.name() << "; order=";
    for (std::size_t i = 0; i < cop.chain_order.size(); ++i) os << (i ? "," : "") << cop.chain_order[i];
    os << "]";
  }
  return os.str();
}

Pmf state_pmf(const PredictiveState& state) {
  if (const auto* mad = std::get_if<MadState>(&state)) return mad->pmf;
  return std::get<CopulaState>(state).joint();
}

std::int64_t state_n(const PredictiveState& state) {
  if (const auto* mad = std::get_if<MadState>(&state)) return mad->n;
  return std::get<CopulaState>(state).n();
}

PredictiveState initial_state(const Pmf& p0, const Method& method) {
  if (const auto* mad = std::get_if<MadMethod>(&method)) return make_mad_state(p0, mad->kernel, mad->schedule);
  if (const auto* dp = std::get_if<DpMethod>(&method)) return make_dp_state(p0, dp->alpha);
  require_positive(p0);
  return CopulaState::from_joint(p0, std::get<CopulaMethod>(method).config, 0);
}

void validate_dataset(const SupportGrid& grid, const Dataset& data) {
  for (const auto& y : data)
    if (!grid.contains(y)) throw DataError("observation is outside the grid");
}

FitResult fit_sequence(const Dataset& data, const Pmf& p0, const Method& method) {
  validate_dataset(p0.grid(), data);
  PredictiveState init = initial_state(p0, method);
  FitResult out{std::move(init), {}, 0.0};
  out.log_predictive.reserve(data.size());

  if (auto* cop = std::get_if<CopulaState>(&out.state)) {
    for (const auto& y : data) {
      out.log_predictive.push_back(std::log(cop->probability(y)));
      cop->update_in_place(y);
    }
  } else {
    auto& mad = std::get<MadState>(out.state);
    const auto& grid = mad.pmf.grid();
    std::vector<double> p(mad.pmf.probs().begin(), mad.pmf.probs().end());
    const bool dp = all_point_mass(mad.kernel);
    std::optional<MhKernel> kernel;
    if (!dp) kernel.emplace(grid, mad.kernel);
    MhKernel::Workspace ws;
    std::vector<double> row;
    std::int64_t n = mad.n;
    for (const auto& y : data) {
      const std::size_t c = grid.flatten(y);
      const double w = mad.schedule.at(++n);
      out.log_predictive.push_back(dp ? dp_step(p, c, w) : mad_step(p, *kernel, ws, row, c, w));
    }
    mad.pmf = Pmf(grid, std::move(p));
    mad.n = n;
  }
  out.log_likelihood = std::accumulate(out.log_predictive.begin(), out.log_predictive.end(), 0.0);
  return out;
}

AveragedFit averaged_fit_over(const std::vector<Dataset>& orderings, const Pmf& p0, const Method& method) {
  if (orderings.empty()) throw ConfigError("at least one ordering is required");
  std::vector<std::optional<FitResult>> fits(orderings.size());
  parallel_for(orderings.size(), [&](std::size_t s) { fits[s] = fit_sequence(orderings[s], p0, method); });

  const auto& grid = p0.grid();
  std::vector<double> avg(grid.size(), 0.0);
  AveragedFit out{initial_state(p0, method), {}, 0.0};
  for (const auto& fit : fits) {
    const Pmf p = state_pmf(fit->state);
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += p[i];
    out.log_likelihoods.push_back(fit->log_likelihood);
  }
  const auto count = static_cast<double>(fits.size());
  for (auto& v : avg) v /= count;
  out.mean_log_likelihood =
      std::accumulate(out.log_likelihoods.begin(), out.log_likelihoods.end(), 0.0) / count;

  Pmf averaged = Pmf::renormalized(grid, std::move(avg));
  const std::int64_t n = state_n(fits.front()->state);
  if (auto* mad = std::get_if<MadState>(&out.state)) {
    mad->pmf = std::move(averaged);
    mad->n = n;
  } else {
    out.state = CopulaState::from_joint(averaged, std::get<CopulaState>(out.state).config(), n);
  }
  return out;
}

AveragedFit permutation_averaged_fit(const Dataset& data, const FitConfig& cfg, const Method& method) {
  if (cfg.permutations < 1) throw ConfigError("at least one permutation is required");
  std::vector<Dataset> orderings;
  orderings.reserve(cfg.permutations);
  orderings.push_back(data);
  for (std::size_t s = 1; s < cfg.permutations; ++s) {
    Rng rng(derive_seed(cfg.seed, s));
    Dataset shuffled = data;
    rng.shuffle(shuffled);
    orderings.push_back(std::move(shuffled));
  }
  return averaged_fit_over(orderings, cfg.base, method);
}

std::vector<Dataset> all_orderings(const Dataset& data) {
  Dataset sorted = data;
  std::sort(sorted.begin(), sorted.end());
  std::vector<Dataset> out;
  do {
    out.push_back(sorted);
  } while (std::next_permutation(sorted.begin(), sorted.end()));
  return out;
}

}  // namespace madseq
