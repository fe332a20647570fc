#include "madseq/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "madseq/error.hpp"
#include "madseq/glm.hpp"
#include "madseq/metrics.hpp"
#include "madseq/parallel.hpp"
#include "madseq/resampling.hpp"
#include "madseq/rng.hpp"

namespace madseq {

namespace {

constexpr BenchMethod kAllMethods[] = {BenchMethod::Mad1, BenchMethod::Mad23,   BenchMethod::MadDpm,
                                       BenchMethod::MadAda, BenchMethod::Dp,    BenchMethod::CopulaA,
                                       BenchMethod::CopulaB, BenchMethod::Glm};

bool is_mad(BenchMethod m) {
  return m == BenchMethod::Mad1 || m == BenchMethod::Mad23 || m == BenchMethod::MadDpm || m == BenchMethod::MadAda;
}
bool is_copula(BenchMethod m) { return m == BenchMethod::CopulaA || m == BenchMethod::CopulaB; }

bool contains(const std::vector<BenchMethod>& v, BenchMethod m) { return std::find(v.begin(), v.end(), m) != v.end(); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<std::size_t> chain_order(const SupportGrid& grid, std::size_t response, bool swap) {
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < grid.arity(); ++j)
    if (j != response) order.push_back(j);
  if (swap && order.size() >= 2) std::swap(order[0], order[1]);
  order.push_back(response);
  return order;
}

Spread spread(const std::vector<double>& v) {
  Spread s;
  s.count = v.size();
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

Quartiles quartiles(const std::vector<double>& v) {
  Quartiles q;
  q.cells = v.size();
  if (v.empty()) return q;
  q.median = sample_quantile(v, 0.5);
  q.q1 = sample_quantile(v, 0.25);
  q.q3 = sample_quantile(v, 0.75);
  return q;
}

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double coverage_rate(const std::vector<std::int8_t>& c) {
  double hit = 0.0, total = 0.0;
  for (auto v : c)
    if (v >= 0) {
      hit += v;
      total += 1.0;
    }
  return total > 0.0 ? hit / total : std::numeric_limits<double>::quiet_NaN();
}

struct ReplicateContext {
  const BenchConfig& cfg;
  const Scenario& scen;
  const CellMeans& cells;
  const std::vector<double>& truth;
  FitConfig fit;
  std::uint64_t seed;
};

void score_predictions(const ReplicateContext& ctx, MethodOutcome& out) {
  const auto& spec = ctx.scen.spec;
  if (ctx.scen.test.empty()) return;
  std::vector<double> pred, target;
  std::vector<std::int64_t> labels;
  for (const auto& pt : ctx.scen.test) {
    pred.push_back(out.cell_means[ctx.cells.cell_of(pt)]);
    target.push_back(static_cast<double>(pt[ctx.scen.response]));
    labels.push_back(pt[ctx.scen.response]);
  }
  if (spec.kind == ScenarioKind::Classification || spec.kind == ScenarioKind::CopulaOrder)
    out.auc = auc(pred, labels);
  else
    out.mse = mse(pred, target);
}

void run_predictive(const ReplicateContext& ctx, BenchMethod m, MethodOutcome& out) {
  const auto& cfg = ctx.cfg;
  const SupportGrid& grid = ctx.scen.grid;
  Method method = bench_method(cfg, m, BaseKernelSpec::point_mass(grid.arity()));
  if (m != BenchMethod::Dp) {
    const auto sel = select_hyperparameters(ctx.scen.train, ctx.fit, method, bench_search(cfg, m));
    method = sel.best();
  }
  out.label = method_name(method);
  const AveragedFit fit = permutation_averaged_fit(ctx.scen.train, ctx.fit, method);
  out.mean_log_likelihood = fit.mean_log_likelihood;
  const Pmf p = fit.pmf();
  out.cell_means = ctx.cells(p.probs());
  if (const auto truth = truth_pmf(ctx.scen.spec)) out.hellinger = hellinger(p, *truth);
  score_predictions(ctx, out);

  if (!contains(cfg.coverage_methods, m)) return;
  const std::size_t mi = static_cast<std::size_t>(std::find(std::begin(kAllMethods), std::end(kAllMethods), m) -
                                                  std::begin(kAllMethods));
  ResampleConfig rc{static_cast<std::int64_t>(ctx.scen.train.size()) + cfg.horizon_extra, cfg.draws,
                    derive_seed(ctx.seed, 16 + mi)};
  const PosteriorDraws draws = predictive_resample(fit.state, rc, [&](std::span<const double> q) { return ctx.cells(q); });
  out.coverage.assign(ctx.cells.cells(), -1);
  for (std::size_t c = 0; c < ctx.cells.cells(); ++c) {
    const auto post = posterior_value(draws, c, cfg.level);
    out.coverage[c] = covers(ctx.truth[c], post.interval.lower, post.interval.upper) ? 1 : 0;
  }
}

void run_glm(const ReplicateContext& ctx, MethodOutcome& out) {
  const auto& scen = ctx.scen;
  const GlmFamily family =
      scen.grid.coord(scen.response).kind == CoordKind::Binary ? GlmFamily::Logistic : GlmFamily::Poisson;
  std::vector<std::vector<double>> x;
  std::vector<double> y;
  glm_design(scen.train, scen.response, x, y);
  const GlmFit fit = glm_fit_irls(x, y, family);
  out.label = family == GlmFamily::Poisson ? "glm[poisson]" : "glm[logistic]";
  if (!fit.converged) out.error = fit.failure;
  out.cell_means.resize(ctx.cells.cells());
  std::vector<std::vector<double>> cov_rows(ctx.cells.cells());
  for (std::size_t c = 0; c < ctx.cells.cells(); ++c) {
    const Point pt = ctx.cells.covariates(c);
    cov_rows[c].assign(pt.begin(), pt.end());
    out.cell_means[c] = glm_mean(fit, cov_rows[c]);
  }
  score_predictions(ctx, out);
  if (!contains(ctx.cfg.coverage_methods, BenchMethod::Glm)) return;
  if (!fit.converged) {
    out.coverage_excluded = true;
    return;
  }
  out.coverage.assign(ctx.cells.cells(), -1);
  for (std::size_t c = 0; c < ctx.cells.cells(); ++c) {
    const auto iv = glm_interval(fit, cov_rows[c], ctx.cfg.level);
    out.coverage[c] = covers(ctx.truth[c], iv.lower, iv.upper) ? 1 : 0;
  }
}

}  // namespace

std::string bench_method_name(BenchMethod m) {
  switch (m) {
    case BenchMethod::Mad1: return "mad-1";
    case BenchMethod::Mad23: return "mad-2/3";
    case BenchMethod::MadDpm: return "mad-dpm";
    case BenchMethod::MadAda: return "mad-ada";
    case BenchMethod::Dp: return "dp";
    case BenchMethod::CopulaA: return "cop-a";
    case BenchMethod::CopulaB: return "cop-b";
    case BenchMethod::Glm: return "glm";
  }
  return "unknown";
}

BenchMethod parse_bench_method(const std::string& name) {
  for (auto m : kAllMethods)
    if (bench_method_name(m) == name) return m;
  throw ConfigError("unknown benchmark method '" + name + "'");
}

bool has_posterior(BenchMethod m) { return m != BenchMethod::Glm; }

Method bench_method(const BenchConfig& cfg, BenchMethod m, const BaseKernelSpec& kernel) {
  switch (m) {
    case BenchMethod::Mad1: return MadMethod{kernel, WeightSchedule::power_law(cfg.alpha, 1.0)};
    case BenchMethod::Mad23: return MadMethod{kernel, WeightSchedule::power_law(cfg.alpha, 2.0 / 3.0)};
    case BenchMethod::MadDpm: return MadMethod{kernel, WeightSchedule::dpm()};
    case BenchMethod::MadAda:
      return MadMethod{kernel, WeightSchedule::adaptive(cfg.alpha, cfg.ada_lambda, cfg.ada_n_star)};
    case BenchMethod::Dp: return DpMethod{cfg.alpha};
    case BenchMethod::CopulaA:
    case BenchMethod::CopulaB: {
      const SupportGrid grid = scenario_grid(cfg.scenario);
      CopulaConfig cc;
      cc.chain_order = chain_order(grid, scenario_response(cfg.scenario), m == BenchMethod::CopulaB);
      return CopulaMethod{cc};
    }
    case BenchMethod::Glm: break;
  }
  throw ConfigError("GLM is not a predictive-sequence method");
}

HyperSearch bench_search(const BenchConfig& cfg, BenchMethod m) {
  HyperSearch s;
  if (is_copula(m)) {
    s.rho_candidates = cfg.rho_candidates;
    return s;
  }
  if (!is_mad(m)) return s;
  const SupportGrid grid = scenario_grid(cfg.scenario);
  const std::size_t response = scenario_response(cfg.scenario);
  for (std::size_t j = 0; j < grid.arity(); ++j) {
    std::vector<CoordKernel> cands;
    const bool binary = grid.coord(j).kind == CoordKind::Binary;
    if (j == response) {
      if (binary)
        for (double d : cfg.response_deltas) cands.push_back(BinaryFlip{d});
      else
        for (double sg : cfg.response_bandwidths) cands.push_back(RoundedGaussian{sg});
    } else if (binary) {
      cands.push_back(BinaryFlip{cfg.covariate_delta});
    } else {
      for (double sg : cfg.covariate_bandwidths) cands.push_back(RoundedGaussian{sg});
    }
    s.kernel_candidates.push_back(std::move(cands));
  }
  return s;
}

CellMeans::CellMeans(const SupportGrid& grid, std::size_t response) : grid_(grid), response_(response) {
  if (response >= grid.arity()) throw ConfigError("response coordinate out of range");
  for (std::size_t j = 0; j < grid.arity(); ++j)
    if (j != response) cells_ *= grid.coord(j).size();
  cell_.resize(grid.size());
  y_.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < grid.arity(); ++j)
      if (j != response) c = c * grid.coord(j).size() + static_cast<std::size_t>(grid.coordinate_at(i, j));
    cell_[i] = static_cast<std::uint32_t>(c);
    y_[i] = static_cast<double>(grid.coordinate_at(i, response));
  }
}

std::size_t CellMeans::cell_of(std::span<const std::int64_t> point) const { return cell_[grid_.flatten(point)]; }

Point CellMeans::covariates(std::size_t cell) const {
  Point out;
  for (std::size_t j = grid_.arity(); j-- > 0;) {
    if (j == response_) continue;
    const std::size_t m = grid_.coord(j).size();
    out.push_back(static_cast<std::int64_t>(cell % m));
    cell /= m;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<double> CellMeans::operator()(std::span<const double> p) const {
  if (p.size() != grid_.size()) throw ConfigError("pmf does not match the grid");
  std::vector<double> num(cells_, 0.0), den(cells_, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) {
    num[cell_[i]] += y_[i] * p[i];
    den[cell_[i]] += p[i];
  }
  for (std::size_t c = 0; c < cells_; ++c) num[c] = den[c] > 0.0 ? num[c] / den[c] : 0.0;
  return num;
}

const MethodSummary& MetricsReport::method(BenchMethod m) const {
  for (const auto& s : summary)
    if (s.method == m) return s;
  throw ConfigError("method not in report: " + bench_method_name(m));
}

MetricsReport run_benchmark(const BenchConfig& cfg) {
  if (cfg.replicates < 1) throw ConfigError("at least one replicate is required");
  if (cfg.methods.empty()) throw ConfigError("no benchmark methods");
  const auto t0 = std::chrono::steady_clock::now();

  const SupportGrid grid = scenario_grid(cfg.scenario);
  const CellMeans cells(grid, scenario_response(cfg.scenario));
  std::vector<double> truth(cells.cells());
  for (std::size_t c = 0; c < cells.cells(); ++c) truth[c] = true_conditional_mean(cfg.scenario, cells.covariates(c));

  MetricsReport report;
  report.config = cfg;
  report.replicates.resize(cfg.replicates);
  parallel_for(cfg.replicates, [&](std::size_t r) {
    ReplicateOutcome& rep = report.replicates[r];
    rep.index = r;
    rep.seed = derive_seed(cfg.seed, r);
    ScenarioSpec spec = cfg.scenario;
    spec.seed = rep.seed;
    const Scenario scen = generate_scenario(spec);
    rep.observed_cells.assign(cells.cells(), 0);
    for (const auto& pt : scen.train) rep.observed_cells[cells.cell_of(pt)] = 1;

    FitConfig fc{cfg.permutations, derive_seed(rep.seed, 2), pmf_uniform(grid)};
    const ReplicateContext ctx{cfg, scen, cells, truth, fc, rep.seed};
    for (BenchMethod m : cfg.methods) {
      MethodOutcome out;
      out.method = m;
      const auto tm = std::chrono::steady_clock::now();
      try {
        if (m == BenchMethod::Glm)
          run_glm(ctx, out);
        else
          run_predictive(ctx, m, out);
      } catch (const Error& e) {
        out.failed = true;
        out.error = e.what();
      }
      out.seconds = seconds_since(tm);
      rep.methods.push_back(std::move(out));
    }
  });

  for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
    MethodSummary s;
    s.method = cfg.methods[k];
    std::vector<double> mse_v, auc_v, hel_v;
    std::vector<double> hit_all(cells.cells(), 0.0), n_all(cells.cells(), 0.0);
    std::vector<double> hit_obs(cells.cells(), 0.0), n_obs(cells.cells(), 0.0);
    for (const auto& rep : report.replicates) {
      const auto& o = rep.methods[k];
      if (o.failed) {
        ++s.failures;
        continue;
      }
      if (std::isfinite(o.mse)) mse_v.push_back(o.mse);
      if (std::isfinite(o.auc)) auc_v.push_back(o.auc);
      if (std::isfinite(o.hellinger)) hel_v.push_back(o.hellinger);
      if (o.coverage_excluded) ++s.coverage_excluded;
      for (std::size_t c = 0; c < o.coverage.size(); ++c) {
        if (o.coverage[c] < 0) continue;
        hit_all[c] += o.coverage[c];
        n_all[c] += 1.0;
        if (rep.observed_cells[c]) {
          hit_obs[c] += o.coverage[c];
          n_obs[c] += 1.0;
        }
      }
    }
    s.mse = spread(mse_v);
    s.auc = spread(auc_v);
    s.hellinger = spread(hel_v);
    std::vector<double> freq_all, freq_obs;
    for (std::size_t c = 0; c < cells.cells(); ++c) {
      if (n_all[c] > 0) freq_all.push_back(hit_all[c] / n_all[c]);
      if (n_obs[c] > 0) freq_obs.push_back(hit_obs[c] / n_obs[c]);
    }
    s.coverage_all = quartiles(freq_all);
    s.coverage_observed = quartiles(freq_obs);
    report.summary.push_back(s);
  }
  report.seconds = seconds_since(t0);
  return report;
}

double proportion_greater(const MetricsReport& r, BenchMethod a, BenchMethod b, Metric metric) {
  const auto& methods = r.config.methods;
  const auto ia = std::find(methods.begin(), methods.end(), a) - methods.begin();
  const auto ib = std::find(methods.begin(), methods.end(), b) - methods.begin();
  if (ia == static_cast<long>(methods.size()) || ib == static_cast<long>(methods.size()))
    throw ConfigError("method not in report");
  const auto value = [&](const MethodOutcome& o) {
    return metric == Metric::Mse ? o.mse : metric == Metric::Auc ? o.auc : o.hellinger;
  };
  double wins = 0.0, total = 0.0;
  for (const auto& rep : r.replicates) {
    const auto& oa = rep.methods[ia];
    const auto& ob = rep.methods[ib];
    if (oa.failed || ob.failed || !std::isfinite(value(oa)) || !std::isfinite(value(ob))) continue;
    total += 1.0;
    if (value(oa) > value(ob)) wins += 1.0;
  }
  return total > 0.0 ? wins / total : std::numeric_limits<double>::quiet_NaN();
}

nlohmann::json config_to_json(const BenchConfig& cfg) {
  nlohmann::json j;
  j["scenario"] = {{"kind", scenario_name(cfg.scenario.kind)}, {"n", cfg.scenario.n},
                   {"test_size", cfg.scenario.test_size},    {"beta2", cfg.scenario.beta2},
                   {"ymax", cfg.scenario.ymax},              {"count_max", cfg.scenario.count_max}};
  auto names = [](const std::vector<BenchMethod>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (auto m : v) a.push_back(bench_method_name(m));
    return a;
  };
  j["methods"] = names(cfg.methods);
  j["coverage_methods"] = names(cfg.coverage_methods);
  j["replicates"] = cfg.replicates;
  j["seed"] = cfg.seed;
  j["permutations"] = cfg.permutations;
  j["draws"] = cfg.draws;
  j["horizon_extra"] = cfg.horizon_extra;
  j["level"] = cfg.level;
  j["alpha"] = cfg.alpha;
  j["ada_lambda"] = cfg.ada_lambda;
  j["ada_n_star"] = cfg.ada_n_star;
  j["covariate_delta"] = cfg.covariate_delta;
  j["response_bandwidths"] = cfg.response_bandwidths;
  j["response_deltas"] = cfg.response_deltas;
  j["covariate_bandwidths"] = cfg.covariate_bandwidths;
  j["rho_candidates"] = cfg.rho_candidates;
  return j;
}

BenchConfig config_from_json(const nlohmann::json& j) {
  BenchConfig cfg;
  try {
    if (j.contains("scenario")) {
      const auto& s = j.at("scenario");
      cfg.scenario.kind = parse_scenario_kind(s.value("kind", std::string("illustrative")));
      cfg.scenario.n = s.value("n", cfg.scenario.n);
      cfg.scenario.test_size = s.value("test_size", cfg.scenario.test_size);
      cfg.scenario.beta2 = s.value("beta2", cfg.scenario.beta2);
      cfg.scenario.ymax = s.value("ymax", cfg.scenario.ymax);
      cfg.scenario.count_max = s.value("count_max", cfg.scenario.count_max);
    }
    auto methods = [](const nlohmann::json& a) {
      std::vector<BenchMethod> v;
      for (const auto& s : a) v.push_back(parse_bench_method(s.get<std::string>()));
      return v;
    };
    if (j.contains("methods")) cfg.methods = methods(j.at("methods"));
    if (j.contains("coverage_methods")) cfg.coverage_methods = methods(j.at("coverage_methods"));
    cfg.replicates = j.value("replicates", cfg.replicates);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.permutations = j.value("permutations", cfg.permutations);
    cfg.draws = j.value("draws", cfg.draws);
    cfg.horizon_extra = j.value("horizon_extra", cfg.horizon_extra);
    cfg.level = j.value("level", cfg.level);
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.ada_lambda = j.value("ada_lambda", cfg.ada_lambda);
    cfg.ada_n_star = j.value("ada_n_star", cfg.ada_n_star);
    cfg.covariate_delta = j.value("covariate_delta", cfg.covariate_delta);
    cfg.response_bandwidths = j.value("response_bandwidths", cfg.response_bandwidths);
    cfg.response_deltas = j.value("response_deltas", cfg.response_deltas);
    cfg.covariate_bandwidths = j.value("covariate_bandwidths", cfg.covariate_bandwidths);
    cfg.rho_candidates = j.value("rho_candidates", cfg.rho_candidates);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid benchmark config: ") + e.what());
  }
  return cfg;
}

nlohmann::json report_to_json(const MetricsReport& r, bool include_timing) {
  nlohmann::json j;
  j["config"] = config_to_json(r.config);
  auto& reps = j["replicates"] = nlohmann::json::array();
  for (const auto& rep : r.replicates) {
    nlohmann::json jr{{"index", rep.index}, {"seed", rep.seed}};
    auto& ms = jr["methods"] = nlohmann::json::array();
    for (const auto& o : rep.methods) {
      nlohmann::json jm{{"method", bench_method_name(o.method)},
                        {"label", o.label},
                        {"failed", o.failed},
                        {"error", o.error},
                        {"mse", num(o.mse)},
                        {"auc", num(o.auc)},
                        {"hellinger", num(o.hellinger)},
                        {"mean_log_likelihood", num(o.mean_log_likelihood)},
                        {"coverage_rate", num(coverage_rate(o.coverage))},
                        {"coverage_excluded", o.coverage_excluded}};
      if (include_timing) jm["seconds"] = o.seconds;
      ms.push_back(std::move(jm));
    }
    reps.push_back(std::move(jr));
  }
  auto& sm = j["summary"] = nlohmann::json::array();
  auto spread_json = [](const Spread& s) { return nlohmann::json{{"mean", num(s.mean)}, {"sd", num(s.sd)}, {"count", s.count}}; };
  auto quart_json = [](const Quartiles& q) {
    return nlohmann::json{{"median", num(q.median)}, {"q1", num(q.q1)}, {"q3", num(q.q3)}, {"cells", q.cells}};
  };
  for (const auto& s : r.summary)
    sm.push_back({{"method", bench_method_name(s.method)},
                  {"failures", s.failures},
                  {"mse", spread_json(s.mse)},
                  {"auc", spread_json(s.auc)},
                  {"hellinger", spread_json(s.hellinger)},
                  {"coverage_all_cells", quart_json(s.coverage_all)},
                  {"coverage_observed_cells", quart_json(s.coverage_observed)},
                  {"coverage_excluded", s.coverage_excluded}});
  if (include_timing) j["seconds"] = r.seconds;
  return j;
}

void write_report_csv(std::ostream& out, const MetricsReport& r) {
  const auto old = out.precision(17);
  out << "replicate,method,metric,value\n";
  for (const auto& rep : r.replicates)
    for (const auto& o : rep.methods) {
      const std::pair<const char*, double> rows[] = {{"mse", o.mse},
                                                     {"auc", o.auc},
                                                     {"hellinger", o.hellinger},
                                                     {"mean_log_likelihood", o.mean_log_likelihood},
                                                     {"coverage_rate", coverage_rate(o.coverage)}};
      for (const auto& [name, v] : rows)
        if (std::isfinite(v)) out << rep.index << ',' << bench_method_name(o.method) << ',' << name << ',' << v << '\n';
    }
  out.precision(old);
}

}  // namespace madseq
