#include <algorithm>
#include <optional>

#include "madseq/error.hpp"
#include "madseq/parallel.hpp"
#include "madseq/predictive.hpp"

namespace madseq {

std::vector<double> default_rho_grid() {
  std::vector<double> out;
  for (int i = 1; i <= 19; ++i) out.push_back(0.05 * i);
  return out;
}

namespace {

std::vector<double> tie_key(const Method& m) {
  if (const auto* mad = std::get_if<MadMethod>(&m)) {
    std::vector<double> key;
    for (const auto& k : mad->kernel.coords) key.push_back(bandwidth(k));
    return key;
  }
  if (const auto* cop = std::get_if<CopulaMethod>(&m)) return {cop->config.rho};
  return {};
}

std::vector<Method> enumerate_candidates(const Method& method, const HyperSearch& search) {
  std::vector<Method> out;
  if (const auto* mad = std::get_if<MadMethod>(&method)) {
    const auto& lists = search.kernel_candidates;
    if (lists.empty()) {
      out.push_back(method);
      return out;
    }
    for (const auto& l : lists)
      if (l.empty()) throw ConfigError("every coordinate needs at least one kernel candidate");
    std::vector<std::size_t> idx(lists.size(), 0);
    while (true) {
      MadMethod cand = *mad;
      cand.kernel.coords.clear();
      for (std::size_t j = 0; j < lists.size(); ++j) cand.kernel.coords.push_back(lists[j][idx[j]]);
      out.emplace_back(std::move(cand));
      std::size_t j = lists.size();
      while (j > 0) {
        --j;
        if (++idx[j] < lists[j].size()) break;
        idx[j] = 0;
        if (j == 0) return out;
      }
    }
  }
  if (const auto* cop = std::get_if<CopulaMethod>(&method)) {
    if (search.rho_candidates.empty()) {
      out.push_back(method);
      return out;
    }
    for (double rho : search.rho_candidates) {
      CopulaMethod cand = *cop;
      cand.config.rho = rho;
      out.emplace_back(std::move(cand));
    }
    return out;
  }
  out.push_back(method);
  return out;
}

}  // namespace

SelectionResult select_hyperparameters(const Dataset& data, const FitConfig& cfg, const Method& method,
                                       const HyperSearch& search) {
  const std::vector<Method> candidates = enumerate_candidates(method, search);
  if (candidates.empty()) throw ConfigError("no hyperparameter candidates");

  std::vector<std::optional<double>> scores(candidates.size());
  parallel_for(candidates.size(), [&](std::size_t i) {
    try {
      initial_state(cfg.base, candidates[i]);
    } catch (const ConfigError&) {
      return;  // invalid candidate for this grid; skipped
    }
    scores[i] = permutation_averaged_fit(data, cfg, candidates[i]).mean_log_likelihood;
  });

  SelectionResult out;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!scores[i]) continue;
    out.table.push_back({candidates[i], method_name(candidates[i]), *scores[i], false});
    const std::size_t row = out.table.size() - 1;
    if (!best) {
      best = row;
      continue;
    }
    const double cur = out.table[*best].mean_log_likelihood;
    const double s = *scores[i];
    if (s > cur || (s == cur && tie_key(candidates[i]) < tie_key(out.table[*best].method))) best = row;
  }
  if (!best) throw ConfigError("all hyperparameter candidates are invalid");
  out.best_index = *best;
  out.table[*best].best = true;
  return out;
}

}  // namespace madseq
