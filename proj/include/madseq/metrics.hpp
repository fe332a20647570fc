#pragma once

#include <cstdint>
#include <span>

namespace madseq {

/// Area under the ROC curve from the Mann-Whitney rank sum, ties at midranks.
/// Throws DataError unless both classes are present.
double auc(std::span<const double> scores, std::span<const std::int64_t> labels);

double mse(std::span<const double> pred, std::span<const double> truth);

}  // namespace madseq
