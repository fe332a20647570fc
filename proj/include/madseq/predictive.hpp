#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "madseq/grid.hpp"
#include "madseq/kernels.hpp"
#include "madseq/weights.hpp"

namespace madseq {

using Dataset = std::vector<Point>;

/// Current predictive p_n of a Metropolis-adjusted Dirichlet sequence.
/// The Dirichlet-process baseline is the special case with a PointMass kernel and
/// w_n = (alpha + n)^-1.
struct MadState {
  Pmf pmf;
  std::int64_t n = 0;
  BaseKernelSpec kernel;
  WeightSchedule schedule = WeightSchedule::power_law(1.0, 1.0);
};

MadState make_mad_state(Pmf p0, BaseKernelSpec kernel, WeightSchedule schedule);
MadState make_dp_state(Pmf p0, double alpha);
bool is_dp(const MadState& state);

/// p_{n+1} = (1 - w_{n+1}) p_n + w_{n+1} k(. | y), renormalized.
MadState mad_update(const MadState& state, std::span<const std::int64_t> y);
/// Same update with a prebuilt kernel (must match the state's grid and spec).
MadState mad_update(const MadState& state, const MhKernel& kernel, std::span<const std::int64_t> y);

/// Polya-urn update (1 - w) p + w 1(. = y) using the state's schedule.
MadState dp_update(const MadState& state, std::span<const std::int64_t> y);

// ---------------------------------------------------------------------------
// Discrete copula baseline.

struct CopulaConfig {
  double rho = 0.5;
  WeightSchedule schedule = WeightSchedule::dpm();
  /// Order in which coordinates enter the chain of conditionals; empty means 0, 1, ..., d-1.
  std::vector<std::size_t> chain_order;
};

/// Joint pmf stored as a chain of conditionals along cfg.chain_order.
class CopulaState {
 public:
  /// Factorizes `joint` along the chain order. Every conditioning cell needs positive mass.
  static CopulaState from_joint(const Pmf& joint, CopulaConfig cfg, std::int64_t n = 0);
  /// Rebuilds a state from stored factor tables (as returned by factors()).
  static CopulaState from_factors(SupportGrid grid, CopulaConfig cfg, std::int64_t n,
                                  std::vector<std::vector<double>> factors);

  const SupportGrid& grid() const { return grid_; }
  const CopulaConfig& config() const { return cfg_; }
  std::int64_t n() const { return n_; }
  const std::vector<std::vector<double>>& factors() const { return factors_; }

  double probability(std::span<const std::int64_t> y) const;
  Pmf joint() const;

  /// Univariate update p <- (1 - w)p + w[(1 - rho)p + rho 1(. = y_j)] applied to each factor
  /// at the observed conditioning values.
  void update_in_place(std::span<const std::int64_t> y);

 private:
  std::size_t factor_row(std::size_t level, std::span<const std::int64_t> y) const;
  static CopulaState skeleton(const SupportGrid& grid, CopulaConfig cfg, std::int64_t n);

  SupportGrid grid_;
  CopulaConfig cfg_;
  std::int64_t n_ = 0;
  std::vector<std::size_t> order_;
  std::vector<std::vector<double>> factors_;  // factors_[l][row * size(order_[l]) + value]
};

CopulaState copula_update(const CopulaState& state, std::span<const std::int64_t> y);

// ---------------------------------------------------------------------------
// Fitting.

struct MadMethod {
  BaseKernelSpec kernel;
  WeightSchedule schedule = WeightSchedule::power_law(1.0, 1.0);
};
struct DpMethod {
  double alpha = 1.0;
};
struct CopulaMethod {
  CopulaConfig config;
};
using Method = std::variant<MadMethod, DpMethod, CopulaMethod>;

std::string method_name(const Method& m);

using PredictiveState = std::variant<MadState, CopulaState>;

Pmf state_pmf(const PredictiveState& state);
std::int64_t state_n(const PredictiveState& state);
PredictiveState initial_state(const Pmf& p0, const Method& method);

struct FitConfig {
  std::size_t permutations = 10;
  std::uint64_t seed = 1;
  Pmf base;  ///< p_0; must be strictly positive
};

struct FitResult {
  PredictiveState state;
  std::vector<double> log_predictive;  ///< log p_{i-1}(y_i)
  double log_likelihood = 0.0;         ///< prequential log-likelihood
};

/// Left-to-right fold of the method's update over data.
FitResult fit_sequence(const Dataset& data, const Pmf& p0, const Method& method);

struct AveragedFit {
  PredictiveState state;  ///< carries the averaged pmf and n = data size
  std::vector<double> log_likelihoods;
  double mean_log_likelihood = 0.0;
  Pmf pmf() const { return state_pmf(state); }
};

/// Averages the final pmfs and prequential log-likelihoods over cfg.permutations orderings:
/// the identity first, then uniform shuffles from streams derived from (cfg.seed, s).
AveragedFit permutation_averaged_fit(const Dataset& data, const FitConfig& cfg, const Method& method);

/// Averages over an explicit list of orderings of the data.
AveragedFit averaged_fit_over(const std::vector<Dataset>& orderings, const Pmf& p0, const Method& method);

/// Every distinct ordering of the data values, in lexicographic order of the sequences.
/// Averaging over these equals averaging over all n! permutations and depends only on the multiset.
std::vector<Dataset> all_orderings(const Dataset& data);

void validate_dataset(const SupportGrid& grid, const Dataset& data);

// ---------------------------------------------------------------------------
// Hyperparameter selection by prequential log-likelihood.

struct HyperSearch {
  /// Candidate kernels per coordinate (MAD methods); the product is searched exhaustively.
  std::vector<std::vector<CoordKernel>> kernel_candidates;
  /// Candidate rho values (copula methods).
  std::vector<double> rho_candidates;
};

/// Default rho grid {0.05, 0.10, ..., 0.95}.
std::vector<double> default_rho_grid();

struct CandidateScore {
  Method method;
  std::string label;
  double mean_log_likelihood = 0.0;
  bool best = false;
};

struct SelectionResult {
  std::size_t best_index = 0;
  std::vector<CandidateScore> table;
  const Method& best() const { return table[best_index].method; }
};

/// Exhaustive search for the candidate maximizing the permutation-averaged prequential
/// log-likelihood. Ties go to the smallest bandwidth vector (lexicographic), then to the
/// smaller rho, then to the earlier candidate.
SelectionResult select_hyperparameters(const Dataset& data, const FitConfig& cfg, const Method& method,
                                       const HyperSearch& search);

}  // namespace madseq
