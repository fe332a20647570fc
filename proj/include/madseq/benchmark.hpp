#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "madseq/predictive.hpp"
#include "madseq/scenario.hpp"

namespace madseq {

enum class BenchMethod { Mad1, Mad23, MadDpm, MadAda, Dp, CopulaA, CopulaB, Glm };

std::string bench_method_name(BenchMethod m);
BenchMethod parse_bench_method(const std::string& name);
bool has_posterior(BenchMethod m);

struct BenchConfig {
  ScenarioSpec scenario;
  std::vector<BenchMethod> methods;
  std::size_t replicates = 1;
  std::uint64_t seed = 1;
  std::size_t permutations = 10;  ///< S
  std::size_t draws = 200;        ///< B
  std::int64_t horizon_extra = 1000;
  double level = 0.95;
  double alpha = 1.0;
  double ada_lambda = 0.75;
  double ada_n_star = 500.0;
  double covariate_delta = 0.25;
  std::vector<double> response_bandwidths = {0.5, 1.0, 2.0, 4.0, 8.0};     ///< count response sigma
  std::vector<double> response_deltas = {0.05, 0.1, 0.2, 0.3, 0.4, 0.5};   ///< binary response delta
  std::vector<double> covariate_bandwidths = {0.5, 1.0, 2.0, 4.0};         ///< count covariate sigma
  std::vector<double> rho_candidates = default_rho_grid();
  /// Methods whose credible intervals for E(Y|x) are evaluated; resampling is the dominant cost.
  std::vector<BenchMethod> coverage_methods;
};

/// Method definition used by the benchmark for a given kernel (MAD variants).
Method bench_method(const BenchConfig& cfg, BenchMethod m, const BaseKernelSpec& kernel);
HyperSearch bench_search(const BenchConfig& cfg, BenchMethod m);

struct MethodOutcome {
  BenchMethod method = BenchMethod::Dp;
  std::string label;
  bool failed = false;
  std::string error;
  double mse = std::numeric_limits<double>::quiet_NaN();
  double auc = std::numeric_limits<double>::quiet_NaN();
  double hellinger = std::numeric_limits<double>::quiet_NaN();
  double mean_log_likelihood = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::int8_t> coverage;  ///< per covariate cell: 1 covered, 0 missed, -1 not evaluated
  std::vector<double> cell_means;      ///< point prediction per covariate cell
  bool coverage_excluded = false;      ///< flagged fit (GLM) kept out of coverage
  double seconds = 0.0;
};

struct ReplicateOutcome {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::vector<std::uint8_t> observed_cells;
  std::vector<MethodOutcome> methods;
};

struct Spread {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double sd = std::numeric_limits<double>::quiet_NaN();
  std::size_t count = 0;
};

struct Quartiles {
  double median = std::numeric_limits<double>::quiet_NaN();
  double q1 = std::numeric_limits<double>::quiet_NaN();
  double q3 = std::numeric_limits<double>::quiet_NaN();
  std::size_t cells = 0;
};

struct MethodSummary {
  BenchMethod method = BenchMethod::Dp;
  std::size_t failures = 0;
  Spread mse, auc, hellinger;
  Quartiles coverage_all, coverage_observed;
  std::size_t coverage_excluded = 0;
};

struct MetricsReport {
  BenchConfig config;
  std::vector<ReplicateOutcome> replicates;
  std::vector<MethodSummary> summary;
  double seconds = 0.0;

  const MethodSummary& method(BenchMethod m) const;
};

MetricsReport run_benchmark(const BenchConfig& cfg);

/// Coverage indicator: the interval is closed on both ends.
inline bool covers(double truth, double lower, double upper) { return truth >= lower && truth <= upper; }

/// Per-cell mean of the response coordinate of a pmf; cells follow the covariate subgrid order.
class CellMeans {
 public:
  CellMeans(const SupportGrid& grid, std::size_t response);
  std::size_t cells() const { return cells_; }
  std::size_t cell_of(std::span<const std::int64_t> point) const;
  Point covariates(std::size_t cell) const;
  std::vector<double> operator()(std::span<const double> p) const;

 private:
  SupportGrid grid_;
  std::size_t response_;
  std::size_t cells_ = 1;
  std::vector<std::uint32_t> cell_;
  std::vector<double> y_;
};

enum class Metric { Mse, Auc, Hellinger };
/// Share of replicates where both methods succeeded and metric(a) > metric(b).
double proportion_greater(const MetricsReport& r, BenchMethod a, BenchMethod b, Metric metric);

nlohmann::json config_to_json(const BenchConfig& cfg);
BenchConfig config_from_json(const nlohmann::json& j);
/// Timing fields are included only on request so reports can be compared byte for byte.
nlohmann::json report_to_json(const MetricsReport& r, bool include_timing);
/// One row per (replicate, method, metric).
void write_report_csv(std::ostream& out, const MetricsReport& r);

}  // namespace madseq
