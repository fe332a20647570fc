#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "madseq/asymptotics.hpp"
#include "madseq/benchmark.hpp"
#include "madseq/io.hpp"
#include "madseq/parallel.hpp"
#include "madseq/resampling.hpp"
#include "madseq/scenario.hpp"
#include "oracles.hpp"

using namespace madseq;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  std::string report;  // canonical output compared byte for byte on reruns
};

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

Outcome exact_identities() {
  std::mt19937_64 gen(20240101);
  double stochastic = 0.0, balance = 0.0, stationary = 0.0, martingale = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    const auto in = oracle::random_instance(gen, 50);
    const Pmf p(in.grid, in.p);
    const std::size_t m = in.grid.size();
    std::vector<std::vector<double>> k(m);
    for (std::size_t c = 0; c < m; ++c) {
      k[c] = mh_kernel_row(p, in.spec, in.grid.unflatten(c)).probs;
      double sum = 0.0;
      for (double v : k[c]) {
        sum += v;
        if (v < 0.0) stochastic = std::max(stochastic, -v);
      }
      stochastic = std::max(stochastic, std::abs(sum - 1.0));
    }
    for (std::size_t y = 0; y < m; ++y) {
      double mix = 0.0;
      for (std::size_t c = 0; c < m; ++c) {
        balance = std::max(balance, std::abs(in.p[c] * k[c][y] - in.p[y] * k[y][c]));
        mix += in.p[c] * k[c][y];
      }
      stationary = std::max(stationary, std::abs(mix - in.p[y]));
    }
    auto state = make_mad_state(p, in.spec, WeightSchedule::adaptive(1.0, 0.5 + 0.5 * (rep % 7 + 1) / 8.0, 50.0));
    state.n = static_cast<std::int64_t>(rep % 40);
    std::vector<double> avg(m, 0.0);
    for (std::size_t y = 0; y < m; ++y) {
      const auto next = mad_update(state, in.grid.unflatten(y));
      for (std::size_t i = 0; i < m; ++i) avg[i] += in.p[y] * next.pmf[i];
    }
    for (std::size_t i = 0; i < m; ++i) martingale = std::max(martingale, std::abs(avg[i] - in.p[i]));
  }
  const double worst = std::max({stochastic, balance, stationary, martingale});
  return {worst <= 1e-10,
          "max errors: row-sum " + fmt(stochastic) + ", detailed balance " + fmt(balance) + ", stationarity " +
              fmt(stationary) + ", martingale " + fmt(martingale),
          ""};
}

Outcome covariance_oracle() {
  std::mt19937_64 gen(20240202);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto in = oracle::random_instance(gen, 200);
    auto state = make_mad_state(Pmf(in.grid, in.p), in.spec, WeightSchedule::power_law(1.0, 0.75));
    state.n = static_cast<std::int64_t>(rep);
    EventSet ev;
    for (int h = 0; h < 3; ++h) ev.events.push_back(oracle::random_event(gen, in.grid.size()));
    const auto est = one_step_cov(state, ev);
    const auto ref = oracle::enumerated_cov(in.p, in.spec, in.grid, ev, state.schedule.at(state.n + 1));
    for (std::size_t a = 0; a < 3; ++a)
      for (std::size_t b = 0; b < 3; ++b) worst = std::max(worst, std::abs(est.sigma_n[a][b] - ref[a][b]));
  }
  return {worst <= 1e-10, "max |Sigma_n - enumeration| = " + fmt(worst), ""};
}

Outcome dp_beta() {
  const auto g = make_grid({Coord::count(20)});
  Rng rng(303);
  Dataset data;
  for (int i = 0; i < 15; ++i) {
    std::int64_t y;
    do {
      y = rng.poisson(6.0);
    } while (y > 20);
    data.push_back({y});
  }
  std::vector<std::uint8_t> ev(g.size());
  for (auto& v : ev) v = rng.bernoulli(0.5) ? 1 : 0;
  const double alpha = 1.0;
  const double p0a = event_probability(pmf_uniform(g), ev);
  double hits = 0.0;
  for (const auto& y : data) hits += ev[static_cast<std::size_t>(y[0])];
  const double a = alpha * p0a + hits, b = alpha * (1.0 - p0a) + 15.0 - hits;
  const double beta_mean = a / (a + b);
  const double beta_sd = std::sqrt(a * b / ((a + b) * (a + b) * (a + b + 1.0)));

  const auto fit = fit_sequence(data, pmf_uniform(g), DpMethod{alpha});
  const auto draws = predictive_resample(fit.state, ResampleConfig{15 + 3000, 2000, 404});
  const auto post = posterior_functional(draws, indicator_functional(ev), 0.95);
  const bool pass = std::abs(post.mean - beta_mean) <= 0.015 && std::abs(post.sd / beta_sd - 1.0) <= 0.25;
  Json rep{{"beta_mean", beta_mean}, {"beta_sd", beta_sd}, {"mean", post.mean}, {"sd", post.sd}, {"samples", post.samples}};
  return {pass,
          "mean " + fmt(post.mean) + " vs Beta " + fmt(beta_mean) + ", sd " + fmt(post.sd) + " vs Beta " + fmt(beta_sd) +
              " (ratio " + fmt(post.sd / beta_sd) + ")",
          rep.dump()};
}

BenchConfig base_config(ScenarioKind kind, std::size_t n, std::size_t test, std::uint64_t seed) {
  BenchConfig cfg;
  cfg.scenario.kind = kind;
  cfg.scenario.n = n;
  cfg.scenario.test_size = test;
  cfg.replicates = 10;
  cfg.seed = seed;
  return cfg;
}

Outcome illustrative() {
  BenchConfig cfg = base_config(ScenarioKind::Illustrative, 50, 0, 4);
  cfg.methods = {BenchMethod::MadAda, BenchMethod::Dp};
  const auto r = run_benchmark(cfg);
  int wins = 0;
  std::string per;
  for (const auto& rep : r.replicates) {
    const double mad = rep.methods[0].hellinger, dp = rep.methods[1].hellinger;
    wins += mad < dp;
    per += (per.empty() ? "" : " ") + fmt(mad, 3) + "/" + fmt(dp, 3);
  }
  return {wins >= 9, "MAD-ada closer to the truth in " + std::to_string(wins) + "/10 replicates (mad/dp: " + per + ")",
          report_to_json(r, false).dump()};
}

Outcome regression() {
  BenchConfig cfg = base_config(ScenarioKind::Regression, 40, 10000, 5);
  cfg.methods = {BenchMethod::MadDpm, BenchMethod::MadAda, BenchMethod::Dp, BenchMethod::Glm};
  cfg.coverage_methods = {BenchMethod::MadAda};
  const auto r = run_benchmark(cfg);
  const double dpm = r.method(BenchMethod::MadDpm).mse.mean, ada = r.method(BenchMethod::MadAda).mse.mean;
  const double dp = r.method(BenchMethod::Dp).mse.mean, glm = r.method(BenchMethod::Glm).mse.mean;
  const auto& cov = r.method(BenchMethod::MadAda).coverage_all;
  const auto& cov_obs = r.method(BenchMethod::MadAda).coverage_observed;
  const bool pass = dpm < glm && dpm < 0.2 * dp && cov.median >= 0.80 && cov.median <= 1.00;
  return {pass,
          "mean MSE mad-dpm " + fmt(dpm) + ", mad-ada " + fmt(ada) + ", glm " + fmt(glm) + ", dp " + fmt(dp) +
              "; mad-ada median coverage " + fmt(cov.median, 3) + " [" + fmt(cov.q1, 3) + ", " + fmt(cov.q3, 3) +
              "] over all cells, " + fmt(cov_obs.median, 3) + " over observed cells",
          report_to_json(r, false).dump()};
}

Outcome classification() {
  BenchConfig cfg = base_config(ScenarioKind::Classification, 150, 10000, 6);
  cfg.methods = {BenchMethod::MadAda, BenchMethod::Dp, BenchMethod::Glm};
  const auto r = run_benchmark(cfg);
  const double ada = r.method(BenchMethod::MadAda).auc.mean, dp = r.method(BenchMethod::Dp).auc.mean;
  const double glm = r.method(BenchMethod::Glm).auc.mean;
  return {ada >= dp + 0.10 && ada >= glm,
          "mean AUC mad-ada " + fmt(ada) + ", dp " + fmt(dp) + ", glm " + fmt(glm), report_to_json(r, false).dump()};
}

Outcome copula_order() {
  BenchConfig cfg = base_config(ScenarioKind::CopulaOrder, 100, 100000, 7);
  cfg.scenario.beta2 = 0.0;
  cfg.methods = {BenchMethod::CopulaA, BenchMethod::CopulaB, BenchMethod::MadDpm};
  const auto r = run_benchmark(cfg);
  const double prop = proportion_greater(r, BenchMethod::CopulaA, BenchMethod::CopulaB, Metric::Auc);
  const double a = r.method(BenchMethod::CopulaA).auc.mean, b = r.method(BenchMethod::CopulaB).auc.mean;
  const double mad = r.method(BenchMethod::MadDpm).auc.mean;
  return {prop <= 0.2 && mad >= std::max(a, b) - 0.01,
          "P(AUC cop-a > cop-b) = " + fmt(prop, 3) + "; mean AUC mad-dpm " + fmt(mad) + ", cop-a " + fmt(a) + ", cop-b " +
              fmt(b),
          report_to_json(r, false).dump()};
}

Outcome asymptotic() {
  ScenarioSpec spec;
  spec.n = 200;
  spec.seed = 8;
  const auto scen = generate_scenario(spec);
  const FitConfig fc{10, 8, pmf_uniform(scen.grid)};
  const MadMethod base{{{RoundedGaussian{1}}}, WeightSchedule::power_law(1.0, 0.75)};
  HyperSearch search;
  search.kernel_candidates = {{RoundedGaussian{0.5}, RoundedGaussian{1}, RoundedGaussian{2}, RoundedGaussian{4},
                               RoundedGaussian{8}}};
  const auto sel = select_hyperparameters(scen.train, fc, base, search);
  const auto fit = permutation_averaged_fit(scen.train, fc, sel.best());
  const auto& state = std::get<MadState>(fit.state);

  EventSet ev;
  const auto indicator = [&](std::int64_t lo, std::int64_t hi) {
    std::vector<std::uint8_t> e(scen.grid.size(), 0);
    std::fill(e.begin() + lo, e.begin() + hi + 1, std::uint8_t{1});
    return e;
  };
  ev.events = {indicator(0, 25), indicator(50, 100), indicator(30, 45)};
  const auto ga = gaussian_approx(state, ev);
  const auto draws = predictive_resample(state, ResampleConfig{200 + 5000, 1000, 808}, [&](std::span<const double> p) {
    std::vector<double> v(ev.count(), 0.0);
    for (std::size_t h = 0; h < ev.count(); ++h)
      for (std::size_t i = 0; i < p.size(); ++i) v[h] += ev.events[h][i] * p[i];
    return v;
  });
  bool pass = true;
  std::string detail = "selected " + describe(std::get<MadMethod>(sel.best()).kernel) + "; sd ratios resampled/asymptotic:";
  Json rep = Json::array();
  for (std::size_t h = 0; h < ev.count(); ++h) {
    const double asym = std::sqrt(ga.covariance[h][h]);
    const double sd = posterior_value(draws, h, 0.95).sd;
    const double ratio = sd / asym;
    pass = pass && ratio >= 0.5 && ratio <= 2.0;
    detail += " " + fmt(ratio, 3);
    rep.push_back({{"center", ga.center[h]}, {"asymptotic_sd", asym}, {"resampled_sd", sd}});
  }
  return {pass, detail, rep.dump()};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::vector<int> only;
  std::size_t threads = 0;
  std::vector<int> expect_fail;
  std::string report_dir;
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
  app.add_option("--expect-fail", expect_fail, "criteria known to be unattainable; the exit status requires them to fail")
      ->delimiter(',');
  app.add_option("--threads", threads, "worker threads for the first pass");
  app.add_option("--report-dir", report_dir, "directory for criterion reports");
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) set_thread_count(threads);
  const auto selected = [&](int id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  const auto expected_failure = [&](int id) {
    return std::find(expect_fail.begin(), expect_fail.end(), id) != expect_fail.end();
  };
  bool as_expected = true;
  const auto note = [&](int id, bool pass) {
    as_expected = as_expected && pass != expected_failure(id);
    if (!expected_failure(id)) return std::string();
    return std::string(pass ? "  (registered as an expected failure but passed)" : "  (expected failure)");
  };

  const std::vector<Criterion> criteria = {
      {1, "exact identities", 30, exact_identities},   {2, "covariance oracle", 30, covariance_oracle},
      {3, "Polya urn Beta check", 120, dp_beta},       {4, "illustrative Hellinger", 300, illustrative},
      {5, "regression desk scale", 1800, regression},  {6, "classification desk scale", 1800, classification},
      {7, "copula ordering study", 1200, copula_order}, {8, "asymptotic diagnostic", 300, asymptotic},
  };

  bool all = true;
  std::map<int, std::string> reports;
  const auto timed = [](const std::function<Outcome()>& f, double& seconds) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o = f();
    seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return o;
  };
  for (const auto& c : criteria) {
    if (!selected(c.id)) continue;
    double seconds = 0.0;
    Outcome o;
    try {
      o = timed(c.run, seconds);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what(), ""};
    }
    const bool in_budget = seconds < c.budget_seconds;
    const bool pass = o.pass && in_budget;
    all = all && pass;
    if (c.id >= 3) reports[c.id] = o.report;
    if (!report_dir.empty() && !o.report.empty()) {
      std::filesystem::create_directories(report_dir);
      std::ofstream(report_dir + "/criterion" + std::to_string(c.id) + ".json") << o.report << "\n";
    }
    std::cout << "criterion " << c.id << " (" << c.name << "): " << (pass ? "PASS" : "FAIL") << "  " << o.detail << "  ["
              << fmt(seconds, 3) << " s" << (in_budget ? "" : ", over the " + fmt(c.budget_seconds, 4) + " s budget")
              << "]" << note(c.id, pass) << std::endl;
  }

  if (selected(9)) {
    // Rerun with a different worker count; reports must match byte for byte.
    const std::size_t first = thread_count();
    set_thread_count(first == 1 ? 2 : 1);
    bool same = !reports.empty();
    std::string detail;
    for (const auto& c : criteria) {
      if (c.id < 3 || !reports.count(c.id)) continue;
      std::string again;
      try {
        again = c.run().report;
      } catch (const std::exception& e) {
        again = std::string("error: ") + e.what();
      }
      const bool eq = !reports[c.id].empty() && again == reports[c.id];
      same = same && eq;
      detail += " " + std::to_string(c.id) + (eq ? "=" : "!=");
    }
    set_thread_count(threads);
    if (reports.empty()) detail = " no report-producing criteria selected";
    all = all && same;
    std::cout << "criterion 9 (reproducibility): " << (same ? "PASS" : "FAIL") << "  reruns with " << (first == 1 ? 2 : 1)
              << " vs " << first << " threads:" << detail << note(9, same) << std::endl;
  }
  std::cout << (all ? "all selected criteria passed" : "some criteria failed")
            << (as_expected ? "; every outcome matches its registered expectation" : "; unexpected outcomes present")
            << std::endl;
  return as_expected ? 0 : 1;
}
