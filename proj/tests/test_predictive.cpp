#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "madseq/error.hpp"
#include "madseq/predictive.hpp"
#include "madseq/scenario.hpp"
#include "oracles.hpp"

using namespace madseq;

namespace {

const SupportGrid& g3() {
  static const SupportGrid g = make_grid({Coord::count(2)});
  return g;
}

Pmf p_example() { return Pmf(g3(), {0.2, 0.3, 0.5}); }

Point pt(std::int64_t v) { return Point{v}; }

}  // namespace

TEST_CASE("weight schedule values") {
  CHECK(WeightSchedule::power_law(1, 1).at(1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(WeightSchedule::dpm().at(1) == doctest::Approx(0.5).epsilon(1e-15));
  const double lambda500 = 0.75 + 0.25 * std::exp(-1.0);
  const auto ada = WeightSchedule::adaptive(1, 0.75, 500);
  CHECK(ada.exponent_at(500) == doctest::Approx(lambda500).epsilon(1e-14));
  CHECK(lambda500 == doctest::Approx(0.841970).epsilon(1e-6));
  CHECK(ada.at(500) == doctest::Approx(std::pow(501.0, -lambda500)).epsilon(1e-14));
  CHECK(ada.at(500) == doctest::Approx(0.005335).epsilon(1e-3));
  CHECK(weight_at(WeightSchedule::power_law(2.0, 0.75), 3) == doctest::Approx(std::pow(5.0, -0.75)).epsilon(1e-15));
  CHECK(WeightSchedule::dpm().at(10) == doctest::Approx((2.0 - 0.1) / 11.0).epsilon(1e-15));
}

TEST_CASE("weight schedule validation") {
  CHECK_THROWS_AS(WeightSchedule::power_law(0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(WeightSchedule::power_law(1.0, 0.5), ConfigError);
  CHECK_THROWS_AS(WeightSchedule::power_law(1.0, 1.1), ConfigError);
  CHECK_THROWS_AS(WeightSchedule::adaptive(1.0, 0.75, 0.0), ConfigError);
  CHECK_THROWS_AS(WeightSchedule::dpm().at(0), ConfigError);
  CHECK_THROWS_AS(WeightSchedule::dpm().exponent_at(3), ConfigError);
}

TEST_CASE("weights lie in (0,1) and decrease") {
  const WeightSchedule schedules[] = {WeightSchedule::power_law(1, 1), WeightSchedule::power_law(1, 2.0 / 3.0),
                                      WeightSchedule::power_law(0.3, 0.51), WeightSchedule::adaptive(1, 0.75, 500),
                                      WeightSchedule::adaptive(2, 0.6, 10)};
  for (const auto& s : schedules) {
    double prev = s.at(1);
    CHECK(prev > 0.0);
    CHECK(prev < 1.0);
    for (std::int64_t n = 2; n <= 100000; ++n) {
      const double w = s.at(n);
      CHECK_MESSAGE(w < prev, s.name() << " at n=" << n);
      CHECK(w > 0.0);
      prev = w;
    }
  }
  // The dpm weights coincide at n = 1 and n = 2 ((2 - 1)/2 = (2 - 1/2)/3) and strictly decrease afterwards.
  const auto dpm = WeightSchedule::dpm();
  CHECK(dpm.at(1) == dpm.at(2));
  double prev = dpm.at(2);
  for (std::int64_t n = 3; n <= 100000; ++n) {
    const double w = dpm.at(n);
    CHECK(w < prev);
    CHECK(w > 0.0);
    prev = w;
  }
}

TEST_CASE("adaptive exponent decreases to its limit") {
  const auto ada = WeightSchedule::adaptive(1, 0.75, 500);
  double prev = ada.exponent_at(1);
  for (std::int64_t n = 2; n <= 10000; ++n) {
    const double l = ada.exponent_at(n);
    CHECK(l < prev);
    CHECK(l > 0.75);
    prev = l;
  }
  CHECK(ada.exponent_at(1'000'000) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("mad_update examples") {
  const auto s0 = make_mad_state(p_example(), {{UniformWindow{1}}}, WeightSchedule::power_law(1, 1));
  const auto s1 = mad_update(s0, pt(1));
  CHECK(s1.n == 1);
  CHECK(s1.pmf[0] == doctest::Approx(0.1 + 1.0 / 9.0).epsilon(1e-14));
  CHECK(s1.pmf[1] == doctest::Approx(0.15 + 2.0 / 9.0).epsilon(1e-14));
  CHECK(s1.pmf[2] == doctest::Approx(0.25 + 1.0 / 6.0).epsilon(1e-14));
  CHECK(s1.pmf[0] == doctest::Approx(0.21111).epsilon(1e-4));

  const auto tiny = make_mad_state(p_example(), {{UniformWindow{1}}}, WeightSchedule::power_law(1e12, 1));
  const auto t1 = mad_update(tiny, pt(1));
  for (std::size_t i = 0; i < 3; ++i) CHECK(t1.pmf[i] == doctest::Approx(p_example()[i]).epsilon(1e-11));

  CHECK_THROWS_AS(mad_update(s0, pt(3)), DataError);
}

TEST_CASE("point-mass MAD reproduces the Polya urn") {
  const auto g = make_grid({Coord::count(100)});
  const auto dp0 = make_dp_state(pmf_uniform(g), 1.0);
  CHECK(is_dp(dp0));
  const auto dp1 = dp_update(dp0, pt(5));
  CHECK(dp1.pmf[5] == doctest::Approx(0.5 / 101.0 + 0.5).epsilon(1e-14));
  CHECK(dp1.pmf[5] == doctest::Approx(0.504950).epsilon(1e-6));
  CHECK(dp1.pmf[6] == doctest::Approx(0.5 / 101.0).epsilon(1e-14));
  const auto dp2 = dp_update(dp1, pt(7));
  CHECK(dp2.pmf[5] == doctest::Approx((1.0 / 3.0) / 101.0 + 1.0 / 3.0).epsilon(1e-14));

  const auto mad1 = mad_update(dp0, pt(5));
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(mad1.pmf[i] == doctest::Approx(dp1.pmf[i]).epsilon(1e-15));
}

TEST_CASE("copula update examples") {
  CopulaConfig cfg;
  cfg.rho = 0.3;
  cfg.schedule = WeightSchedule::power_law(1, 1);
  auto s = CopulaState::from_joint(p_example(), cfg);
  const auto s1 = copula_update(s, pt(1));
  const Pmf j = s1.joint();
  CHECK(j[0] == doctest::Approx(0.17).epsilon(1e-14));
  CHECK(j[1] == doctest::Approx(0.405).epsilon(1e-14));
  CHECK(j[2] == doctest::Approx(0.425).epsilon(1e-14));

  cfg.rho = 0.0;
  const Pmf same = copula_update(CopulaState::from_joint(p_example(), cfg), pt(1)).joint();
  for (std::size_t i = 0; i < 3; ++i) CHECK(same[i] == doctest::Approx(p_example()[i]).epsilon(1e-15));

  cfg.rho = 1.0;
  const Pmf dp = copula_update(CopulaState::from_joint(p_example(), cfg), pt(1)).joint();
  const auto urn = dp_update(make_mad_state(p_example(), BaseKernelSpec::point_mass(1), WeightSchedule::power_law(1, 1)), pt(1));
  for (std::size_t i = 0; i < 3; ++i) CHECK(dp[i] == doctest::Approx(urn.pmf[i]).epsilon(1e-14));

  cfg.rho = 1.5;
  CHECK_THROWS_AS(CopulaState::from_joint(p_example(), cfg), ConfigError);
}

TEST_CASE("copula chain updates only the observed conditioning row") {
  const auto g = make_grid({Coord::binary(), Coord::count(2)});
  CopulaConfig cfg;
  cfg.rho = 0.5;
  cfg.schedule = WeightSchedule::power_law(1, 1);
  const auto s0 = CopulaState::from_joint(pmf_uniform(g), cfg);
  const Point y{1, 2};
  const auto s1 = copula_update(s0, y);
  // First factor: (0.5, 0.5) -> 0.75 (0.5, 0.5) + 0.25 e_1.
  const Pmf first = marginal(s1.joint(), std::vector<std::size_t>{0});
  CHECK(first[1] == doctest::Approx(0.75 * 0.5 + 0.25).epsilon(1e-14));
  // Conditional of the second coordinate given x0 = 0 is untouched.
  const CoordValue at0[] = {{0, 0}};
  const Pmf c0 = conditional(s1.joint(), at0);
  for (double v : c0.probs()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  const CoordValue at1[] = {{0, 1}};
  const Pmf c1 = conditional(s1.joint(), at1);
  CHECK(c1[2] == doctest::Approx(0.75 / 3.0 + 0.25).epsilon(1e-14));

  CopulaConfig swapped = cfg;
  swapped.chain_order = {1, 0};
  const auto t1 = copula_update(CopulaState::from_joint(pmf_uniform(g), swapped), y);
  const Pmf second = marginal(t1.joint(), std::vector<std::size_t>{1});
  CHECK(second[2] == doctest::Approx(0.75 / 3.0 + 0.25).epsilon(1e-14));

  swapped.chain_order = {0, 0};
  CHECK_THROWS_AS(CopulaState::from_joint(pmf_uniform(g), swapped), ConfigError);
}

TEST_CASE("copula output stays normalized") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    const auto in = oracle::random_instance(gen);
    CopulaConfig cfg;
    cfg.rho = u(gen);
    auto s = CopulaState::from_joint(Pmf(in.grid, in.p), cfg, static_cast<std::int64_t>(gen() % 10));
    for (int k = 0; k < 5; ++k) {
      s = copula_update(s, in.grid.unflatten(gen() % in.grid.size()));
      double total = 0.0;
      for (std::size_t i = 0; i < in.grid.size(); ++i) total += s.probability(in.grid.unflatten(i));
      CHECK(std::abs(total - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("fit_sequence") {
  const Method mad = MadMethod{{{UniformWindow{1}}}, WeightSchedule::power_law(1, 1)};
  const auto empty = fit_sequence({}, p_example(), mad);
  CHECK(state_n(empty.state) == 0);
  CHECK(empty.log_likelihood == 0.0);
  const Pmf e = state_pmf(empty.state);
  for (std::size_t i = 0; i < 3; ++i) CHECK(e[i] == p_example()[i]);

  const auto single = fit_sequence({pt(2)}, p_example(), mad);
  CHECK(single.log_predictive.size() == 1);
  CHECK(single.log_likelihood == doctest::Approx(std::log(0.5)).epsilon(1e-15));

  const auto two = fit_sequence({pt(1), pt(0)}, p_example(), mad);
  const double expect = std::log(0.3) + std::log(0.1 + 1.0 / 9.0);
  CHECK(two.log_likelihood == doctest::Approx(expect).epsilon(1e-14));
  CHECK(two.log_likelihood == doctest::Approx(-2.759344).epsilon(1e-6));

  CHECK_THROWS_AS(fit_sequence({pt(4)}, p_example(), mad), DataError);
  CHECK_THROWS_AS(fit_sequence({pt(0)}, Pmf(g3(), {0.5, 0.5, 0.0}), mad), ConfigError);
}

TEST_CASE("fit_sequence matches the brute-force recursion") {
  std::mt19937_64 gen(8);
  for (int rep = 0; rep < 50; ++rep) {
    const auto in = oracle::random_instance(gen);
    const auto sched = WeightSchedule::adaptive(1.0, 0.75, 5.0);
    Dataset data;
    for (int k = 0; k < 8; ++k) data.push_back(in.grid.unflatten(gen() % in.grid.size()));
    const auto fit = fit_sequence(data, Pmf(in.grid, in.p), MadMethod{in.spec, sched});
    std::vector<double> p = in.p;
    double ll = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const std::size_t c = in.grid.flatten(data[i]);
      ll += std::log(p[c]);
      p = oracle::mad_step(p, in.spec, in.grid, c, sched.at(static_cast<std::int64_t>(i) + 1));
    }
    CHECK(fit.log_likelihood == doctest::Approx(ll).epsilon(1e-12));
    const Pmf got = state_pmf(fit.state);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(std::abs(got[i] - p[i]) <= 1e-12);
  }
}

TEST_CASE("permutation averaging") {
  const Method mad = MadMethod{{{UniformWindow{1}}}, WeightSchedule::power_law(1, 1)};
  const Dataset data{pt(1), pt(0), pt(2), pt(2)};

  FitConfig one{1, 9, p_example()};
  const auto avg1 = permutation_averaged_fit(data, one, mad);
  const auto seq = fit_sequence(data, p_example(), mad);
  const Pmf a = avg1.pmf(), b = state_pmf(seq.state);
  for (std::size_t i = 0; i < 3; ++i) CHECK(a[i] == b[i]);
  CHECK(avg1.mean_log_likelihood == seq.log_likelihood);
  CHECK(state_n(avg1.state) == 4);

  FitConfig many{7, 9, p_example()};
  const auto single = permutation_averaged_fit({pt(2)}, many, mad);
  const auto single_seq = fit_sequence({pt(2)}, p_example(), mad);
  for (std::size_t i = 0; i < 3; ++i) CHECK(single.pmf()[i] == doctest::Approx(state_pmf(single_seq.state)[i]).epsilon(1e-15));

  const Dataset d10{pt(1), pt(0)}, d01{pt(0), pt(1)};
  const auto both = averaged_fit_over({d10, d01}, p_example(), mad);
  const Pmf f10 = state_pmf(fit_sequence(d10, p_example(), mad).state);
  const Pmf f01 = state_pmf(fit_sequence(d01, p_example(), mad).state);
  for (std::size_t i = 0; i < 3; ++i) CHECK(both.pmf()[i] == doctest::Approx(0.5 * (f10[i] + f01[i])).epsilon(1e-15));
  CHECK(both.mean_log_likelihood ==
        doctest::Approx(0.5 * (fit_sequence(d10, p_example(), mad).log_likelihood +
                               fit_sequence(d01, p_example(), mad).log_likelihood))
            .epsilon(1e-15));

  const auto again = permutation_averaged_fit(data, many, mad);
  const auto first = permutation_averaged_fit(data, many, mad);
  for (std::size_t i = 0; i < 3; ++i) CHECK(again.pmf()[i] == first.pmf()[i]);
  CHECK_THROWS_AS(permutation_averaged_fit(data, FitConfig{0, 1, p_example()}, mad), ConfigError);
}

TEST_CASE("averaging over every ordering is invariant to input order") {
  const auto g = make_grid({Coord::count(6)});
  const Method mad = MadMethod{{{RoundedGaussian{1.2}}}, WeightSchedule::power_law(1, 0.75)};
  const Dataset data{pt(1), pt(5), pt(2)};
  Dataset reversed(data.rbegin(), data.rend());
  const auto a = averaged_fit_over(all_orderings(data), pmf_uniform(g), mad);
  const auto b = averaged_fit_over(all_orderings(reversed), pmf_uniform(g), mad);
  CHECK(all_orderings(data).size() == 6);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(a.pmf()[i] == b.pmf()[i]);
  CHECK(a.mean_log_likelihood == b.mean_log_likelihood);
  // Single orderings do depend on the order.
  const Pmf fa = state_pmf(fit_sequence(data, pmf_uniform(g), mad).state);
  const Pmf fb = state_pmf(fit_sequence(reversed, pmf_uniform(g), mad).state);
  double diff = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) diff += std::abs(fa[i] - fb[i]);
  CHECK(diff > 1e-6);
}

TEST_CASE("one-step martingale identity") {
  std::mt19937_64 gen(41);
  for (int rep = 0; rep < 100; ++rep) {
    const auto in = oracle::random_instance(gen);
    auto state = make_mad_state(Pmf(in.grid, in.p), in.spec, WeightSchedule::adaptive(1.0, 0.75, 3.0));
    state.n = static_cast<std::int64_t>(gen() % 20);
    std::vector<double> mix(in.grid.size(), 0.0);
    for (std::size_t y = 0; y < in.grid.size(); ++y) {
      const auto next = mad_update(state, in.grid.unflatten(y));
      for (std::size_t i = 0; i < mix.size(); ++i) mix[i] += in.p[y] * next.pmf[i];
    }
    for (std::size_t i = 0; i < mix.size(); ++i) CHECK(std::abs(mix[i] - in.p[i]) <= 1e-10);
  }
}

TEST_CASE("prior mean identity for random events") {
  std::mt19937_64 gen(43);
  for (int rep = 0; rep < 100; ++rep) {
    const auto in = oracle::random_instance(gen);
    const Pmf p0(in.grid, in.p);
    const EventSet ev{{oracle::random_event(gen, in.grid.size())}};
    double lhs = 0.0;
    for (std::size_t y = 0; y < in.grid.size(); ++y)
      lhs += in.p[y] * kernel_event_row(p0, in.spec, ev, in.grid.unflatten(y))[0];
    CHECK(std::abs(lhs - event_probability(p0, ev.events[0])) <= 1e-10);
  }
}

TEST_CASE("fits are invariant to the coordinate order") {
  const auto g = make_grid({Coord::count(4), Coord::binary(), Coord::count(3)});
  const BaseKernelSpec spec{{RoundedGaussian{1.3}, BinaryFlip{0.2}, UniformWindow{1}}};
  const std::size_t perm[] = {2, 0, 1};  // new coordinate j is old coordinate perm[j]
  std::vector<Coord> pc;
  BaseKernelSpec ps;
  for (std::size_t j : perm) {
    pc.push_back(g.coord(j));
    ps.coords.push_back(spec.coords[j]);
  }
  const auto h = make_grid(pc);
  const auto permute = [&](const Point& y) {
    Point out;
    for (std::size_t j : perm) out.push_back(y[j]);
    return out;
  };

  std::mt19937_64 gen(6);
  Dataset data, pdata;
  for (int k = 0; k < 25; ++k) {
    data.push_back(g.unflatten(gen() % g.size()));
    pdata.push_back(permute(data.back()));
  }
  const auto sched = WeightSchedule::adaptive(1.0, 0.75, 10.0);
  const Pmf a = state_pmf(fit_sequence(data, pmf_uniform(g), MadMethod{spec, sched}).state);
  const Pmf b = state_pmf(fit_sequence(pdata, pmf_uniform(h), MadMethod{ps, sched}).state);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(a[i] - b[h.flatten(permute(g.unflatten(i)))]) <= 1e-13);
}

TEST_CASE("hyperparameter selection") {
  const auto g = make_grid({Coord::count(30)});
  FitConfig cfg{10, 5, pmf_uniform(g)};
  const Method base = MadMethod{{{PointMass{}}}, WeightSchedule::power_law(1, 1)};

  HyperSearch single{{{UniformWindow{2}}}, {}};
  const auto s1 = select_hyperparameters({pt(3), pt(4)}, cfg, base, single);
  REQUIRE(s1.table.size() == 1);
  CHECK(s1.table[0].best);

  // Smooth bimodal data: a uniform window beats the point mass.
  std::mt19937_64 gen(12);
  std::vector<double> w(g.size());
  for (std::size_t y = 0; y < w.size(); ++y)
    w[y] = std::exp(-0.5 * std::pow((double(y) - 8.0) / 2.5, 2)) + std::exp(-0.5 * std::pow((double(y) - 21.0) / 2.5, 2));
  std::discrete_distribution<int> dd(w.begin(), w.end());
  Dataset data;
  for (int i = 0; i < 50; ++i) data.push_back(pt(dd(gen)));
  HyperSearch pm_vs_window{{{PointMass{}, UniformWindow{1}}}, {}};
  const auto s2 = select_hyperparameters(data, cfg, base, pm_vs_window);
  REQUIRE(s2.table.size() == 2);
  CHECK(s2.table[1].mean_log_likelihood > s2.table[0].mean_log_likelihood);
  CHECK(s2.best_index == 1);

  // Bandwidth grid on the illustrative data: one flagged argmax.
  ScenarioSpec spec;
  spec.n = 50;
  spec.seed = 3;
  const auto scen = generate_scenario(spec);
  FitConfig icfg{10, 5, pmf_uniform(scen.grid)};
  HyperSearch sig{{{RoundedGaussian{0.5}, RoundedGaussian{2}, RoundedGaussian{10}, RoundedGaussian{50}}}, {}};
  const auto s3 = select_hyperparameters(scen.train, icfg, MadMethod{{{PointMass{}}}, WeightSchedule::adaptive(1, 0.75, 500)}, sig);
  REQUIRE(s3.table.size() == 4);
  int flagged = 0;
  double best = -INFINITY;
  for (const auto& r : s3.table) {
    flagged += r.best;
    best = std::max(best, r.mean_log_likelihood);
  }
  CHECK(flagged == 1);
  CHECK(s3.table[s3.best_index].mean_log_likelihood == best);
  MESSAGE("illustrative bandwidth table: " << s3.table[0].mean_log_likelihood << ", " << s3.table[1].mean_log_likelihood
                                           << ", " << s3.table[2].mean_log_likelihood << ", "
                                           << s3.table[3].mean_log_likelihood);
}

TEST_CASE("selection ties go to the smallest bandwidth") {
  const auto g = make_grid({Coord::count(10)});
  FitConfig cfg{3, 1, pmf_uniform(g)};
  // With one observation every candidate scores log p0(y).
  HyperSearch s{{{RoundedGaussian{4}, RoundedGaussian{0.5}, RoundedGaussian{2}}}, {}};
  const auto r = select_hyperparameters({pt(5)}, cfg, MadMethod{{{PointMass{}}}, WeightSchedule::power_law(1, 1)}, s);
  const auto& best = std::get<MadMethod>(r.best());
  CHECK(std::get<RoundedGaussian>(best.kernel.coords[0]).sigma == 0.5);

  CopulaMethod cop;
  cop.config.schedule = WeightSchedule::dpm();
  HyperSearch rs{{}, {0.7, 0.2, 0.4}};
  const auto rc = select_hyperparameters({pt(5)}, cfg, cop, rs);
  CHECK(std::get<CopulaMethod>(rc.best()).config.rho == 0.2);
  CHECK(default_rho_grid().size() == 19);
  CHECK(default_rho_grid().front() == doctest::Approx(0.05));
  CHECK(default_rho_grid().back() == doctest::Approx(0.95));

  HyperSearch invalid{{{UniformWindow{1}}}, {}};
  const auto bg = make_grid({Coord::binary()});
  CHECK_THROWS_AS(select_hyperparameters({pt(1)}, FitConfig{1, 1, pmf_uniform(bg)},
                                         MadMethod{{{PointMass{}}}, WeightSchedule::power_law(1, 1)}, invalid),
                  ConfigError);
}
