#include "madseq/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "madseq/error.hpp"

namespace madseq {

SupportGrid::SupportGrid(std::vector<Coord> coords) : coords_(std::move(coords)) {
  if (coords_.empty()) throw ConfigError("support grid needs at least one coordinate");
  std::size_t total = 1;
  for (const auto& c : coords_) {
    if (c.kind == CoordKind::Binary && c.max != 1) throw ConfigError("binary coordinate must have max 1");
    if (c.max < 0) throw ConfigError("count coordinate max must be nonnegative");
    const auto n = static_cast<std::size_t>(c.max) + 1;
    if (n == 0 || total > std::numeric_limits<std::size_t>::max() / n ||
        total * n > (std::size_t{1} << 40))
      throw ConfigError("support grid too large for dense storage");
    total *= n;
  }
  total_ = total;
  strides_.assign(coords_.size(), 1);
  for (std::size_t j = coords_.size() - 1; j > 0; --j) strides_[j - 1] = strides_[j] * coords_[j].size();
}

std::size_t SupportGrid::flatten(std::span<const std::int64_t> point) const {
  if (point.size() != coords_.size()) throw DataError("point arity does not match grid");
  std::size_t index = 0;
  for (std::size_t j = 0; j < coords_.size(); ++j) {
    if (point[j] < 0 || point[j] > coords_[j].max) throw DataError("point is outside the support grid");
    index += static_cast<std::size_t>(point[j]) * strides_[j];
  }
  return index;
}

Point SupportGrid::unflatten(std::size_t index) const {
  if (index >= total_) throw DataError("flat index out of range");
  Point p(coords_.size());
  for (std::size_t j = 0; j < coords_.size(); ++j) {
    p[j] = static_cast<std::int64_t>(index / strides_[j]);
    index %= strides_[j];
  }
  return p;
}

bool SupportGrid::contains(std::span<const std::int64_t> point) const {
  if (point.size() != coords_.size()) return false;
  for (std::size_t j = 0; j < coords_.size(); ++j)
    if (point[j] < 0 || point[j] > coords_[j].max) return false;
  return true;
}

SupportGrid SupportGrid::subgrid(std::span<const std::size_t> keep) const {
  std::vector<Coord> sub;
  sub.reserve(keep.size());
  for (auto j : keep) {
    if (j >= coords_.size()) throw ConfigError("coordinate index out of range");
    sub.push_back(coords_[j]);
  }
  return SupportGrid(std::move(sub));
}

SupportGrid make_grid(std::vector<Coord> spec) { return SupportGrid(std::move(spec)); }

Pmf::Pmf(SupportGrid grid, std::vector<double> probs) : grid_(std::move(grid)), probs_(std::move(probs)) {
  if (probs_.size() != grid_.size()) throw ConfigError("probability vector length does not match grid");
  double sum = 0.0;
  for (double v : probs_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw NumericalError("probabilities must be finite and nonnegative");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw NumericalError("probabilities do not sum to one");
}

Pmf Pmf::renormalized(SupportGrid grid, std::vector<double> probs, double tol) {
  const double sum = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (!(std::abs(sum - 1.0) <= tol)) throw NumericalError("pre-normalization mass drifted from one");
  for (auto& v : probs) v /= sum;
  return Pmf(std::move(grid), std::move(probs));
}

Pmf Pmf::from_weights(SupportGrid grid, std::vector<double> weights) {
  const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(sum > 0.0) || !std::isfinite(sum)) throw NumericalError("weights have no positive finite mass");
  for (auto& v : weights) v /= sum;
  return Pmf(std::move(grid), std::move(weights));
}

Pmf pmf_uniform(const SupportGrid& grid) {
  return Pmf(grid, std::vector<double>(grid.size(), 1.0 / static_cast<double>(grid.size())));
}

double functional_mean(const Pmf& p, const Functional& f) {
  if (f.values.size() != p.size()) throw ConfigError("functional is not defined on the pmf grid");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += f.values[i] * p[i];
  return acc;
}

double event_probability(const Pmf& p, std::span<const std::uint8_t> indicator) {
  if (indicator.size() != p.size()) throw ConfigError("event is not defined on the pmf grid");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (indicator[i]) acc += p[i];
  return acc;
}

Functional coordinate_functional(const SupportGrid& grid, std::size_t j) {
  if (j >= grid.arity()) throw ConfigError("coordinate index out of range");
  Functional f;
  f.values.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) f.values[i] = static_cast<double>(grid.coordinate_at(i, j));
  return f;
}

Functional indicator_functional(std::span<const std::uint8_t> indicator) {
  return Functional{std::vector<double>(indicator.begin(), indicator.end())};
}

Pmf marginal(const Pmf& p, std::span<const std::size_t> keep) {
  const auto& grid = p.grid();
  if (keep.empty()) throw ConfigError("marginal needs at least one kept coordinate");
  std::vector<std::size_t> sorted(keep.begin(), keep.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ConfigError("marginal keep set has duplicates");
  SupportGrid sub = grid.subgrid(keep);
  std::vector<double> out(sub.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::size_t k = 0;
    for (std::size_t a = 0; a < keep.size(); ++a)
      k += static_cast<std::size_t>(grid.coordinate_at(i, keep[a])) * sub.stride(a);
    out[k] += p[i];
  }
  return Pmf::from_weights(std::move(sub), std::move(out));
}

Pmf conditional(const Pmf& p, std::span<const CoordValue> fixed) {
  const auto& grid = p.grid();
  std::vector<int> is_fixed(grid.arity(), 0);
  std::vector<std::int64_t> value(grid.arity(), 0);
  for (const auto& cv : fixed) {
    if (cv.coord >= grid.arity()) throw ConfigError("conditioning coordinate out of range");
    if (is_fixed[cv.coord]) throw ConfigError("coordinate fixed twice");
    if (cv.value < 0 || cv.value > grid.coord(cv.coord).max) throw DataError("conditioning value outside grid");
    is_fixed[cv.coord] = 1;
    value[cv.coord] = cv.value;
  }
  std::vector<std::size_t> free;
  for (std::size_t j = 0; j < grid.arity(); ++j)
    if (!is_fixed[j]) free.push_back(j);

  SupportGrid sub = free.empty() ? SupportGrid({Coord::count(0)}) : grid.subgrid(free);
  std::vector<double> out(sub.size(), 0.0);
  // Walk only the slice: enumerate the free coordinates, fixed ones pinned.
  std::size_t base = 0;
  for (std::size_t j = 0; j < grid.arity(); ++j)
    if (is_fixed[j]) base += static_cast<std::size_t>(value[j]) * grid.stride(j);
  double mass = 0.0;
  for (std::size_t k = 0; k < sub.size(); ++k) {
    std::size_t idx = base;
    if (!free.empty())
      for (std::size_t a = 0; a < free.size(); ++a)
        idx += static_cast<std::size_t>(sub.coordinate_at(k, a)) * grid.stride(free[a]);
    out[k] = p[idx];
    mass += p[idx];
  }
  if (!(mass > 0.0)) throw NumericalError("conditioning slice has zero mass");
  for (auto& v : out) v /= mass;
  return Pmf(std::move(sub), std::move(out));
}

double hellinger(const Pmf& p, const Pmf& q) {
  if (!(p.grid() == q.grid())) throw ConfigError("hellinger distance needs pmfs on the same grid");
  // 1 - sum sqrt(pq) written as half the squared distance of the root vectors, which avoids cancellation.
  double h2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    h2 += d * d;
  }
  return std::sqrt(std::clamp(0.5 * h2, 0.0, 1.0));
}

std::vector<std::uint8_t> validate_event(const SupportGrid& grid, std::vector<std::uint8_t> indicator) {
  if (indicator.size() != grid.size()) throw ConfigError("event indicator length does not match grid");
  for (auto v : indicator)
    if (v > 1) throw ConfigError("event indicator entries must be 0 or 1");
  return indicator;
}

}  // namespace madseq
