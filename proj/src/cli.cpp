#include "madseq/cli.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include "madseq/benchmark.hpp"
#include "madseq/error.hpp"
#include "madseq/io.hpp"
#include "madseq/parallel.hpp"
#include "madseq/resampling.hpp"

namespace madseq {

namespace {

struct Options {
  std::string data, config, out, fit, scenario = "illustrative", csv, test_out;
  std::size_t threads = 0, n = 50, test_size = 0, draws = 1000;
  std::int64_t horizon = -1, ymax = 0;
  std::uint64_t seed = 1;
  double beta2 = 0.0, level = 0.95;
  bool timing = false;
};

struct FitPlan {
  DatasetSchema schema;
  Dataset data;
  Method method;
  std::optional<HyperSearch> search;
  FitConfig fit;
};

FitPlan plan_fit(const Json& cfg, const std::string& data_path) {
  FitPlan plan;
  if (!cfg.contains("schema")) throw ConfigError("config needs a 'schema'");
  plan.schema = schema_from_json(cfg.at("schema"));
  const SupportGrid grid = plan.schema.grid();
  plan.data = parse_dataset_file(data_path, plan.schema);
  if (plan.data.empty()) throw DataError("dataset has no rows");

  const auto n = static_cast<std::int64_t>(plan.data.size());
  std::int64_t horizon = n + 1000;
  if (cfg.contains("resample")) horizon = cfg.at("resample").value("N", horizon);
  const double n_star = static_cast<double>(horizon) / 2.0;

  Json mj = cfg;
  if (cfg.contains("weights")) mj["weights"] = cfg.at("weights");
  plan.method = method_from_json(mj);
  if (auto* mad = std::get_if<MadMethod>(&plan.method)) {
    if (cfg.contains("weights")) mad->schedule = schedule_from_json(cfg.at("weights"), n_star);
    if (cfg.contains("kernel_candidates")) {
      HyperSearch s;
      for (const auto& coord : cfg.at("kernel_candidates")) {
        std::vector<CoordKernel> list;
        for (const auto& k : coord) list.push_back(kernel_from_json(k));
        s.kernel_candidates.push_back(std::move(list));
      }
      if (s.kernel_candidates.size() != grid.arity()) throw ConfigError("kernel_candidates needs one list per column");
      plan.search = std::move(s);
      if (mad->kernel.coords.empty())
        for (const auto& l : plan.search->kernel_candidates) mad->kernel.coords.push_back(l.front());
    } else if (mad->kernel.coords.empty()) {
      throw ConfigError("MAD config needs 'kernel' or 'kernel_candidates'");
    }
  } else if (auto* cop = std::get_if<CopulaMethod>(&plan.method)) {
    if (cfg.contains("weights")) cop->config.schedule = schedule_from_json(cfg.at("weights"), n_star);
    if (cfg.contains("rho_candidates")) {
      HyperSearch s;
      s.rho_candidates = cfg.at("rho_candidates").get<std::vector<double>>();
      plan.search = std::move(s);
    }
  }
  plan.fit.permutations = cfg.value("S", std::size_t{10});
  plan.fit.seed = cfg.value("seed", std::uint64_t{1});
  plan.fit.base = pmf_uniform(grid);
  return plan;
}

Json selection_json(const SelectionResult& sel) {
  Json table = Json::array();
  for (const auto& row : sel.table)
    table.push_back({{"label", row.label},
                     {"method", method_to_json(row.method)},
                     {"mean_log_likelihood", row.mean_log_likelihood},
                     {"best", row.best}});
  return {{"best", sel.best_index}, {"table", table}};
}

void finish(const std::string& out_path, const std::string& text, RunManifest& m) {
  write_text_file(out_path, text);
  m.finished_at = utc_timestamp();
  write_manifest(out_path, m);
}

Json load_config(const std::string& path) {
  if (path.empty()) throw ConfigError("--config is required");
  return read_json_file(path);
}

int cmd_fit(const Options& o, RunManifest& m, std::ostream& out) {
  const Json cfg = load_config(o.config);
  m.config = cfg;
  FitPlan plan = plan_fit(cfg, o.data);
  m.seed = plan.fit.seed;
  Json selection;
  if (plan.search) {
    const auto sel = select_hyperparameters(plan.data, plan.fit, plan.method, *plan.search);
    plan.method = sel.best();
    selection = selection_json(sel);
  }
  const AveragedFit fit = permutation_averaged_fit(plan.data, plan.fit, plan.method);
  FitRecord rec{plan.method, fit.state, fit.mean_log_likelihood, fit.log_likelihoods, plan.fit.permutations,
                plan.fit.seed, plan.schema};
  Json j = fit_to_json(rec);
  if (!selection.is_null()) j["selection"] = selection;
  finish(o.out, j.dump(1) + "\n", m);
  out << "fitted " << method_name(plan.method) << " on " << plan.data.size()
      << " observations; prequential log-likelihood " << fit.mean_log_likelihood << "\n";
  return kExitOk;
}

int cmd_select(const Options& o, RunManifest& m, std::ostream& out) {
  const Json cfg = load_config(o.config);
  m.config = cfg;
  const FitPlan plan = plan_fit(cfg, o.data);
  m.seed = plan.fit.seed;
  const auto sel = select_hyperparameters(plan.data, plan.fit, plan.method, plan.search.value_or(HyperSearch{}));
  finish(o.out, selection_json(sel).dump(1) + "\n", m);
  out << "best " << sel.table[sel.best_index].label << " (mean log-likelihood "
      << sel.table[sel.best_index].mean_log_likelihood << ")\n";
  return kExitOk;
}

ResampleConfig resample_config(const Options& o, const FitRecord& rec) {
  ResampleConfig rc;
  rc.draws = o.draws;
  rc.seed = o.seed;
  rc.horizon = o.horizon >= 0 ? o.horizon : state_n(rec.state) + 1000;
  return rc;
}

int cmd_resample(const Options& o, RunManifest& m, std::ostream& out) {
  if (o.fit.empty()) throw ConfigError("--fit is required");
  const FitRecord rec = fit_from_json(read_json_file(o.fit));
  const ResampleConfig rc = resample_config(o, rec);
  m.seed = rc.seed;
  m.config = {{"fit", o.fit}, {"draws", rc.draws}, {"horizon", rc.horizon}, {"seed", rc.seed}};
  const PosteriorDraws draws = predictive_resample(rec.state, rc);
  std::ostringstream csv;
  write_draws_csv(csv, draws);
  finish(o.out, csv.str(), m);
  out << "wrote " << draws.size() << " draws over " << draws.grid.size() << " cells\n";
  return kExitOk;
}

int cmd_report(const Options& o, RunManifest& m, std::ostream& out) {
  if (o.fit.empty()) throw ConfigError("--fit is required");
  const FitRecord rec = fit_from_json(read_json_file(o.fit));
  const ResampleConfig rc = resample_config(o, rec);
  m.seed = rc.seed;
  m.config = {{"fit", o.fit}, {"draws", rc.draws}, {"horizon", rc.horizon}, {"seed", rc.seed}, {"level", o.level}};
  const Pmf p = state_pmf(rec.state);
  const SupportGrid& grid = p.grid();

  std::vector<double> lower, upper;
  if (o.draws > 0) {
    const PosteriorDraws draws = predictive_resample(rec.state, rc);
    std::vector<double> col(draws.pmfs.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
      for (std::size_t b = 0; b < draws.pmfs.size(); ++b) col[b] = draws.pmfs[b][i];
      const auto s = summarize_samples(col, o.level);
      lower.push_back(s.interval.lower);
      upper.push_back(s.interval.upper);
    }
  }
  std::ostringstream csv;
  csv.precision(17);
  for (std::size_t j = 0; j < grid.arity(); ++j)
    csv << (rec.schema ? rec.schema->columns[j].name : "c" + std::to_string(j)) << ',';
  csv << "p" << (lower.empty() ? "" : ",lower,upper") << '\n';
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = 0; j < grid.arity(); ++j) csv << grid.coordinate_at(i, j) << ',';
    csv << p[i];
    if (!lower.empty()) csv << ',' << lower[i] << ',' << upper[i];
    csv << '\n';
  }
  finish(o.out, csv.str(), m);
  out << "wrote " << grid.size() << " cells\n";
  return kExitOk;
}

int cmd_simulate(const Options& o, RunManifest& m, std::ostream& out) {
  ScenarioSpec spec;
  spec.kind = parse_scenario_kind(o.scenario);
  spec.n = o.n;
  spec.test_size = o.test_size;
  spec.seed = o.seed;
  spec.beta2 = o.beta2;
  spec.ymax = o.ymax;
  m.seed = o.seed;
  m.config = {{"scenario", o.scenario}, {"n", o.n}, {"test_size", o.test_size}, {"seed", o.seed},
              {"beta2", o.beta2},       {"ymax", o.ymax}};
  const Scenario scen = generate_scenario(spec);
  const DatasetSchema schema = scenario_schema(spec);
  std::ostringstream csv;
  write_dataset_csv(csv, schema, scen.train);
  write_text_file(o.out + ".schema.json", Json{{"schema", schema_to_json(schema)}}.dump(2) + "\n");
  if (!o.test_out.empty()) {
    std::ostringstream test;
    write_dataset_csv(test, schema, scen.test);
    write_text_file(o.test_out, test.str());
  }
  finish(o.out, csv.str(), m);
  out << "wrote " << scen.train.size() << " observations\n";
  return kExitOk;
}

int cmd_bench(const Options& o, RunManifest& m, std::ostream& out) {
  const Json cfg = load_config(o.config);
  m.config = cfg;
  const BenchConfig bc = config_from_json(cfg);
  m.seed = bc.seed;
  const MetricsReport report = run_benchmark(bc);
  if (!o.csv.empty()) {
    std::ostringstream csv;
    write_report_csv(csv, report);
    write_text_file(o.csv, csv.str());
  }
  finish(o.out, report_to_json(report, o.timing).dump(1) + "\n", m);
  for (const auto& s : report.summary) {
    out << bench_method_name(s.method);
    if (s.mse.count) out << " mse=" << s.mse.mean;
    if (s.auc.count) out << " auc=" << s.auc.mean;
    if (s.hellinger.count) out << " hellinger=" << s.hellinger.mean;
    if (s.coverage_all.cells) out << " coverage=" << s.coverage_all.median;
    out << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Metropolis-adjusted Dirichlet sequences for discrete data", "madseq"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--threads", o.threads, "worker threads (default: MADSEQ_THREADS or hardware)");

  auto* fit = app.add_subcommand("fit", "fit a predictive sequence to a dataset");
  fit->add_option("--data", o.data)->required();
  fit->add_option("--config", o.config)->required();
  fit->add_option("--out", o.out)->required();

  auto* select = app.add_subcommand("select", "prequential hyperparameter selection");
  select->add_option("--data", o.data)->required();
  select->add_option("--config", o.config)->required();
  select->add_option("--out", o.out)->required();

  auto* resample = app.add_subcommand("resample", "predictive resampling from a fit");
  resample->add_option("--fit", o.fit)->required();
  resample->add_option("--draws", o.draws);
  resample->add_option("--horizon", o.horizon);
  resample->add_option("--seed", o.seed);
  resample->add_option("--out", o.out)->required();

  auto* report = app.add_subcommand("report", "tidy pmf table with per-cell credible bounds");
  report->add_option("--fit", o.fit)->required();
  report->add_option("--draws", o.draws, "0 disables credible bounds");
  report->add_option("--horizon", o.horizon);
  report->add_option("--seed", o.seed);
  report->add_option("--level", o.level);
  report->add_option("--out", o.out)->required();

  auto* simulate = app.add_subcommand("simulate", "draw a dataset from a built-in scenario");
  simulate->add_option("--scenario", o.scenario)->check(
      CLI::IsMember({"illustrative", "regression", "classification", "copula-order"}));
  simulate->add_option("--n", o.n);
  simulate->add_option("--seed", o.seed);
  simulate->add_option("--test-size", o.test_size);
  simulate->add_option("--test-out", o.test_out);
  simulate->add_option("--beta2", o.beta2);
  simulate->add_option("--ymax", o.ymax);
  simulate->add_option("--out", o.out)->required();

  auto* bench = app.add_subcommand("bench", "run a simulation benchmark");
  bench->add_option("--config", o.config)->required();
  bench->add_option("--out", o.out)->required();
  bench->add_option("--csv", o.csv);
  bench->add_flag("--timing", o.timing, "include timings in the report");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "madseq: " << e.what() << "\n";
    return kExitUsage;
  }

  if (o.threads > 0) set_thread_count(o.threads);
  RunManifest manifest;
  manifest.args = args;
  manifest.started_at = utc_timestamp();
  using Handler = int (*)(const Options&, RunManifest&, std::ostream&);
  const std::pair<CLI::App*, Handler> handlers[] = {{fit, cmd_fit},           {select, cmd_select},
                                                    {resample, cmd_resample}, {report, cmd_report},
                                                    {simulate, cmd_simulate}, {bench, cmd_bench}};
  try {
    for (const auto& [sub, handler] : handlers)
      if (sub->parsed()) {
        manifest.command = sub->get_name();
        return handler(o, manifest, out);
      }
  } catch (const ConfigError& e) {
    err << "madseq: configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "madseq: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const Error& e) {
    err << "madseq: numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Json::exception& e) {
    err << "madseq: configuration error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace madseq
