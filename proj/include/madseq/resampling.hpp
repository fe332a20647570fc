#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "madseq/grid.hpp"
#include "madseq/predictive.hpp"
#include "madseq/rng.hpp"

namespace madseq {

struct ResampleConfig {
  std::int64_t horizon = 0;  ///< N; must be at least the state's n
  std::size_t draws = 1000;  ///< B
  std::uint64_t seed = 1;
};

/// Maps a terminal pmf (probabilities in flat order) to a vector of functional values.
using DrawReducer = std::function<std::vector<double>(std::span<const double>)>;

/// B terminal pmfs, or B reduced vectors when a reducer was supplied.
struct PosteriorDraws {
  SupportGrid grid;
  std::vector<std::vector<double>> pmfs;
  std::vector<std::vector<double>> values;
  ResampleConfig config;
  std::int64_t start_n = 0;

  bool has_pmfs() const { return !pmfs.empty(); }
  std::size_t size() const { return has_pmfs() ? pmfs.size() : values.size(); }
};

/// Forward-simulates each draw from N - n future points. Every step samples the next point
/// by inverse CDF over flat index order with one uniform, then applies the state's update.
/// Draw b uses the stream derive_seed(cfg.seed, b).
PosteriorDraws predictive_resample(const PredictiveState& state, const ResampleConfig& cfg,
                                   const DrawReducer& reducer = {});

/// Terminal pmf of a single trajectory driven by rng.
std::vector<double> resample_trajectory(const PredictiveState& state, std::int64_t horizon, Rng& rng);

struct CredibleInterval {
  double level = 0.95;
  double lower = 0.0;
  double upper = 0.0;
};

struct FunctionalPosterior {
  std::vector<double> samples;
  double mean = 0.0;
  double sd = 0.0;
  CredibleInterval interval;
};

/// Quantile with linear interpolation between order statistics (h = (B - 1) u).
double sample_quantile(std::vector<double> samples, double u);

/// Mean, sd and equal-tailed interval of arbitrary samples.
FunctionalPosterior summarize_samples(std::vector<double> samples, double level);

/// theta_b = sum_y f(y) p_N^(b)(y) for every draw, summarized.
FunctionalPosterior posterior_functional(const PosteriorDraws& draws, const Functional& f, double level);

/// Column j of reduced draws, summarized.
FunctionalPosterior posterior_value(const PosteriorDraws& draws, std::size_t j, double level);

struct PairCorrelation {
  std::vector<double> samples;  ///< defined per-draw correlations, in draw order
  std::size_t undefined = 0;    ///< draws where f1 or f2 had zero variance
  double mean = 0.0;
};

double pmf_correlation(std::span<const double> p, const Functional& f1, const Functional& f2);

PairCorrelation posterior_pair_correlation(const PosteriorDraws& draws, const Functional& f1,
                                           const Functional& f2);

/// Rows are draws; columns are grid cells (or reduced values).
void write_draws_csv(std::ostream& out, const PosteriorDraws& draws);

}  // namespace madseq
