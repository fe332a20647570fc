#include "madseq/scenario.hpp"

#include <cmath>

#include "madseq/error.hpp"
#include "madseq/rng.hpp"

namespace madseq {

namespace {

double poisson_pmf(std::int64_t k, double rate) {
  return std::exp(static_cast<double>(k) * std::log(rate) - rate - std::lgamma(static_cast<double>(k) + 1.0));
}

std::int64_t poisson_below(Rng& rng, double rate, std::int64_t max) {
  while (true) {
    const std::int64_t v = rng.poisson(rate);
    if (v <= max) return v;
  }
}

double logistic(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

Point draw_point(const ScenarioSpec& spec, std::int64_t ymax, Rng& rng) {
  switch (spec.kind) {
    case ScenarioKind::Illustrative: {
      while (true) {
        const double rate = rng.bernoulli(0.4) ? 25.0 : 60.0;
        const std::int64_t y = rng.poisson(rate);
        if (y <= ymax) return {y};
      }
    }
    case ScenarioKind::Regression: {
      Point p(11);
      for (std::size_t j = 1; j <= 10; ++j) p[j] = rng.bernoulli(0.5) ? 1 : 0;
      p[0] = poisson_below(rng, std::exp(regression_eta(std::span(p).subspan(1))), ymax);
      return p;
    }
    case ScenarioKind::Classification: {
      Point p(11);
      for (std::size_t j = 1; j <= 10; ++j) p[j] = rng.bernoulli(kClassificationTau[j - 1]) ? 1 : 0;
      p[0] = rng.bernoulli(logistic(classification_eta(std::span(p).subspan(1)))) ? 1 : 0;
      return p;
    }
    case ScenarioKind::CopulaOrder: {
      Point p(3);
      while (true) {
        const double rate = rng.bernoulli(0.7) ? 3.0 : 12.0;
        p[0] = rng.poisson(rate);
        if (p[0] <= spec.count_max) break;
      }
      p[1] = poisson_below(rng, 9.0, spec.count_max);
      p[2] = rng.bernoulli(logistic(copula_order_eta(std::span(p).first(2), spec.beta2))) ? 1 : 0;
      return p;
    }
  }
  throw ConfigError("unknown scenario");
}

}  // namespace

std::string scenario_name(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::Illustrative: return "illustrative";
    case ScenarioKind::Regression: return "regression";
    case ScenarioKind::Classification: return "classification";
    case ScenarioKind::CopulaOrder: return "copula-order";
  }
  return "unknown";
}

ScenarioKind parse_scenario_kind(const std::string& name) {
  for (auto k : {ScenarioKind::Illustrative, ScenarioKind::Regression, ScenarioKind::Classification,
                 ScenarioKind::CopulaOrder})
    if (scenario_name(k) == name) return k;
  throw ConfigError("unknown scenario '" + name + "'");
}

std::int64_t effective_ymax(const ScenarioSpec& spec) {
  if (spec.ymax > 0) return spec.ymax;
  return spec.kind == ScenarioKind::Regression ? 200 : 100;
}

SupportGrid scenario_grid(const ScenarioSpec& spec) {
  switch (spec.kind) {
    case ScenarioKind::Illustrative: return make_grid({Coord::count(effective_ymax(spec))});
    case ScenarioKind::Regression: {
      std::vector<Coord> c{Coord::count(effective_ymax(spec))};
      c.resize(11, Coord::binary());
      return make_grid(c);
    }
    case ScenarioKind::Classification: return make_grid(std::vector<Coord>(11, Coord::binary()));
    case ScenarioKind::CopulaOrder:
      return make_grid({Coord::count(spec.count_max), Coord::count(spec.count_max), Coord::binary()});
  }
  throw ConfigError("unknown scenario");
}

std::size_t scenario_response(const ScenarioSpec& spec) { return spec.kind == ScenarioKind::CopulaOrder ? 2 : 0; }

Scenario generate_scenario(const ScenarioSpec& spec) {
  if (spec.n < 1) throw ConfigError("scenario needs n >= 1");
  if (spec.kind == ScenarioKind::CopulaOrder && spec.count_max < 1) throw ConfigError("count_max must be positive");
  Scenario out{spec, scenario_grid(spec), scenario_response(spec), {}, {}};
  const std::int64_t ymax = effective_ymax(spec);
  Rng train_rng(derive_seed(spec.seed, 0));
  Rng test_rng(derive_seed(spec.seed, 1));
  out.train.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) out.train.push_back(draw_point(spec, ymax, train_rng));
  out.test.reserve(spec.test_size);
  for (std::size_t i = 0; i < spec.test_size; ++i) out.test.push_back(draw_point(spec, ymax, test_rng));
  return out;
}

Pmf illustrative_truth(std::int64_t ymax) {
  std::vector<double> w(static_cast<std::size_t>(ymax) + 1);
  for (std::int64_t y = 0; y <= ymax; ++y) w[y] = 0.4 * poisson_pmf(y, 25.0) + 0.6 * poisson_pmf(y, 60.0);
  return Pmf::from_weights(make_grid({Coord::count(ymax)}), std::move(w));
}

double regression_eta(std::span<const std::int64_t> x) {
  if (x.size() != 10) throw ConfigError("regression scenario has 10 covariates");
  const auto v = [&](std::size_t j) { return static_cast<double>(x[j - 1]); };
  const double a = -0.5 * v(1) + 1.5 * v(2) + v(3) + 0.5 * v(4) - 0.5 * v(5);
  const double b = -0.7 * v(6) + 0.5 * v(7) + 0.7 * v(8) - 0.3 * v(9) - 0.3 * v(10);
  return 1.0 + std::sqrt(std::abs(a)) + b * b;
}

double classification_eta(std::span<const std::int64_t> x) {
  if (x.size() != 10) throw ConfigError("classification scenario has 10 covariates");
  const auto v = [&](std::size_t j) { return static_cast<double>(x[j - 1]); };
  const double q = 3.0 * v(9) - 2.0 * v(10);
  return -3.0 + 2.0 * v(1) - 4.0 * v(2) + 3.0 * v(3) - 3.0 * v(4) - 3.0 * v(5) * v(6) +
         std::sqrt(std::abs(2.0 * v(7) - 3.0 * v(8))) + q * q;
}

double copula_order_eta(std::span<const std::int64_t> x, double beta2) {
  if (x.size() != 2) throw ConfigError("copula-order scenario has 2 covariates");
  return 6.0 - 2.1 * static_cast<double>(x[0]) + beta2 * static_cast<double>(x[1]);
}

double true_conditional_mean(const ScenarioSpec& spec, std::span<const std::int64_t> covariates) {
  switch (spec.kind) {
    case ScenarioKind::Illustrative: {
      const Pmf p = illustrative_truth(effective_ymax(spec));
      double m = 0.0;
      for (std::size_t y = 0; y < p.size(); ++y) m += static_cast<double>(y) * p[y];
      return m;
    }
    case ScenarioKind::Regression: return std::exp(regression_eta(covariates));
    case ScenarioKind::Classification: return logistic(classification_eta(covariates));
    case ScenarioKind::CopulaOrder: return logistic(copula_order_eta(covariates, spec.beta2));
  }
  throw ConfigError("unknown scenario");
}

std::optional<Pmf> truth_pmf(const ScenarioSpec& spec) {
  if (spec.kind == ScenarioKind::Illustrative) return illustrative_truth(effective_ymax(spec));
  return std::nullopt;
}

}  // namespace madseq
