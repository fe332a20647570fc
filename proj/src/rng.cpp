#include "madseq/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace madseq {

std::int64_t Rng::poisson(double rate) {
  if (!(rate >= 0.0) || rate > 700.0) throw std::invalid_argument("poisson rate outside supported range");
  const double u = uniform();
  double term = std::exp(-rate);
  double cdf = term;
  std::int64_t k = 0;
  while (u >= cdf) {
    ++k;
    term *= rate / static_cast<double>(k);
    const double next_cdf = cdf + term;
    if (next_cdf == cdf) break;
    cdf = next_cdf;
  }
  return k;
}

}  // namespace madseq
