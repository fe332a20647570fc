#include <algorithm>
#include <cmath>
#include <numeric>

#include "madseq/error.hpp"
#include "madseq/predictive.hpp"

namespace madseq {

CopulaState CopulaState::skeleton(const SupportGrid& grid, CopulaConfig cfg, std::int64_t n) {
  if (!(cfg.rho >= 0.0 && cfg.rho <= 1.0)) throw ConfigError("copula rho must lie in [0, 1]");
  CopulaState s;
  s.grid_ = grid;
  s.n_ = n;
  if (cfg.chain_order.empty()) {
    cfg.chain_order.resize(grid.arity());
    std::iota(cfg.chain_order.begin(), cfg.chain_order.end(), std::size_t{0});
  }
  std::vector<std::size_t> check = cfg.chain_order;
  std::sort(check.begin(), check.end());
  for (std::size_t j = 0; j < check.size(); ++j)
    if (check[j] != j || check.size() != grid.arity())
      throw ConfigError("copula chain order must be a permutation of the coordinates");
  s.order_ = cfg.chain_order;
  s.cfg_ = std::move(cfg);
  return s;
}

CopulaState CopulaState::from_factors(SupportGrid grid, CopulaConfig cfg, std::int64_t n,
                                      std::vector<std::vector<double>> factors) {
  CopulaState s = skeleton(grid, std::move(cfg), n);
  if (factors.size() != grid.arity()) throw ConfigError("copula needs one factor table per coordinate");
  std::size_t rows = 1;
  for (std::size_t l = 0; l < factors.size(); ++l) {
    const std::size_t m = grid.coord(s.order_[l]).size();
    if (factors[l].size() != rows * m) throw ConfigError("copula factor table has the wrong size");
    for (double v : factors[l])
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("copula factor entries must be finite and nonnegative");
    rows *= m;
  }
  s.factors_ = std::move(factors);
  return s;
}

CopulaState CopulaState::from_joint(const Pmf& joint, CopulaConfig cfg, std::int64_t n) {
  const SupportGrid& grid = joint.grid();
  CopulaState s = skeleton(grid, std::move(cfg), n);

  const std::size_t d = grid.arity();
  s.factors_.resize(d);
  std::size_t rows = 1;
  for (std::size_t l = 0; l < d; ++l) {
    const std::size_t m = grid.coord(s.order_[l]).size();
    std::vector<double> table(rows * m, 0.0);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      std::size_t r = 0;
      for (std::size_t a = 0; a < l; ++a)
        r = r * grid.coord(s.order_[a]).size() + static_cast<std::size_t>(grid.coordinate_at(i, s.order_[a]));
      table[r * m + static_cast<std::size_t>(grid.coordinate_at(i, s.order_[l]))] += joint[i];
    }
    for (std::size_t r = 0; r < rows; ++r) {
      double mass = 0.0;
      for (std::size_t v = 0; v < m; ++v) mass += table[r * m + v];
      if (!(mass > 0.0)) throw NumericalError("copula chain has a zero-mass conditioning cell");
      for (std::size_t v = 0; v < m; ++v) table[r * m + v] /= mass;
    }
    s.factors_[l] = std::move(table);
    rows *= m;
  }
  return s;
}

std::size_t CopulaState::factor_row(std::size_t level, std::span<const std::int64_t> y) const {
  std::size_t r = 0;
  for (std::size_t a = 0; a < level; ++a) r = r * grid_.coord(order_[a]).size() + static_cast<std::size_t>(y[order_[a]]);
  return r;
}

double CopulaState::probability(std::span<const std::int64_t> y) const {
  if (!grid_.contains(y)) throw DataError("observation is outside the grid");
  double p = 1.0;
  for (std::size_t l = 0; l < order_.size(); ++l) {
    const std::size_t m = grid_.coord(order_[l]).size();
    p *= factors_[l][factor_row(l, y) * m + static_cast<std::size_t>(y[order_[l]])];
  }
  return p;
}

Pmf CopulaState::joint() const {
  std::vector<double> probs(grid_.size());
  Point y(grid_.arity());
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    for (std::size_t j = 0; j < grid_.arity(); ++j) y[j] = grid_.coordinate_at(i, j);
    probs[i] = probability(y);
  }
  return Pmf::renormalized(grid_, std::move(probs));
}

void CopulaState::update_in_place(std::span<const std::int64_t> y) {
  if (!grid_.contains(y)) throw DataError("observation is outside the grid");
  const double w = cfg_.schedule.at(n_ + 1);
  const double rho = cfg_.rho;
  for (std::size_t l = 0; l < order_.size(); ++l) {
    const std::size_t m = grid_.coord(order_[l]).size();
    double* f = factors_[l].data() + factor_row(l, y) * m;
    const auto obs = static_cast<std::size_t>(y[order_[l]]);
    double sum = 0.0;
    for (std::size_t v = 0; v < m; ++v) {
      f[v] = (1.0 - w) * f[v] + w * ((1.0 - rho) * f[v] + (v == obs ? rho : 0.0));
      sum += f[v];
    }
    for (std::size_t v = 0; v < m; ++v) f[v] /= sum;
  }
  ++n_;
}

CopulaState copula_update(const CopulaState& state, std::span<const std::int64_t> y) {
  CopulaState next = state;
  next.update_in_place(y);
  return next;
}

}  // namespace madseq
