#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "madseq/grid.hpp"
#include "madseq/predictive.hpp"

namespace madseq {

enum class ScenarioKind { Illustrative, Regression, Classification, CopulaOrder };

std::string scenario_name(ScenarioKind kind);
ScenarioKind parse_scenario_kind(const std::string& name);

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::Illustrative;
  std::size_t n = 50;
  std::size_t test_size = 0;
  std::uint64_t seed = 1;
  double beta2 = 0.0;          ///< CopulaOrder only
  std::int64_t ymax = 0;       ///< count response max; 0 picks 100 (Illustrative) or 200 (Regression)
  std::int64_t count_max = 50; ///< CopulaOrder covariate max
};

/// Draws from a scenario. Points are laid out on `grid`; `response` is the response coordinate.
struct Scenario {
  ScenarioSpec spec;
  SupportGrid grid;
  std::size_t response = 0;
  Dataset train;
  Dataset test;
};

/// Support grid of a scenario (depends only on kind and maxima).
SupportGrid scenario_grid(const ScenarioSpec& spec);
std::size_t scenario_response(const ScenarioSpec& spec);
std::int64_t effective_ymax(const ScenarioSpec& spec);

/// Train and test sets from independent streams derived from spec.seed. Count draws above a
/// coordinate max are redrawn, so samples follow the truncated law.
Scenario generate_scenario(const ScenarioSpec& spec);

/// 0.4 Poisson(25) + 0.6 Poisson(60) restricted to {0..ymax} and renormalized.
Pmf illustrative_truth(std::int64_t ymax = 100);

double regression_eta(std::span<const std::int64_t> x);
double classification_eta(std::span<const std::int64_t> x);
double copula_order_eta(std::span<const std::int64_t> x, double beta2);
inline const std::vector<double> kClassificationTau = {0.45, 0.65, 0.7, 0.4, 0.4, 0.6, 0.7, 0.3, 0.55, 0.55};

/// True E(Y | x) for covariates x given in grid order with the response removed.
double true_conditional_mean(const ScenarioSpec& spec, std::span<const std::int64_t> covariates);

/// Exact generating pmf when the scenario has one on its grid (Illustrative).
std::optional<Pmf> truth_pmf(const ScenarioSpec& spec);

}  // namespace madseq
