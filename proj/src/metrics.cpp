#include "madseq/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "madseq/error.hpp"

namespace madseq {

double auc(std::span<const double> scores, std::span<const std::int64_t> labels) {
  if (scores.size() != labels.size() || scores.empty()) throw DataError("scores and labels must be nonempty and aligned");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  double rank_sum = 0.0;
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      const auto l = labels[order[k]];
      if (l != 0 && l != 1) throw DataError("labels must be 0 or 1");
      if (l == 1) {
        rank_sum += midrank;
        ++positives;
      }
    }
    i = j;
  }
  const std::size_t negatives = n - positives;
  if (positives == 0 || negatives == 0) throw DataError("AUC is undefined with a single class");
  const auto np = static_cast<double>(positives), nn = static_cast<double>(negatives);
  return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double mse(std::span<const double> pred, std::span<const double> truth) {
  if (pred.size() != truth.size() || pred.empty()) throw DataError("predictions and targets must be nonempty and aligned");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - truth[i]) * (pred[i] - truth[i]);
  return s / static_cast<double>(pred.size());
}

}  // namespace madseq
