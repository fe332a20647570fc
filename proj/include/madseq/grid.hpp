#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace madseq {

/// Kind of a grid coordinate.
enum class CoordKind { Count, Binary };

/// One coordinate of a support grid: Count{max} ranges over {0,...,max},
/// Binary over {0,1}.
struct Coord {
  CoordKind kind = CoordKind::Count;
  std::int64_t max = 0;

  static Coord count(std::int64_t max) { return {CoordKind::Count, max}; }
  static Coord binary() { return {CoordKind::Binary, 1}; }

  std::size_t size() const { return static_cast<std::size_t>(max) + 1; }
  bool operator==(const Coord&) const = default;
};

using Point = std::vector<std::int64_t>;

/// Finite product of coordinate ranges with row-major flat indexing
/// (first coordinate slowest).
class SupportGrid {
 public:
  SupportGrid() = default;
  explicit SupportGrid(std::vector<Coord> coords);

  std::size_t arity() const { return coords_.size(); }
  std::size_t size() const { return total_; }
  const std::vector<Coord>& coords() const { return coords_; }
  const Coord& coord(std::size_t j) const { return coords_[j]; }
  std::size_t stride(std::size_t j) const { return strides_[j]; }

  std::size_t flatten(std::span<const std::int64_t> point) const;
  Point unflatten(std::size_t index) const;
  /// Value of coordinate j at flat index i, without materializing the point.
  std::int64_t coordinate_at(std::size_t index, std::size_t j) const {
    return static_cast<std::int64_t>((index / strides_[j]) % coords_[j].size());
  }
  bool contains(std::span<const std::int64_t> point) const;

  /// Grid restricted to a subset of coordinates, in the given order.
  SupportGrid subgrid(std::span<const std::size_t> keep) const;

  bool operator==(const SupportGrid& other) const { return coords_ == other.coords_; }

 private:
  std::vector<Coord> coords_;
  std::vector<std::size_t> strides_;
  std::size_t total_ = 0;
};

SupportGrid make_grid(std::vector<Coord> spec);

/// Dense probability table over a grid.
class Pmf {
 public:
  Pmf() = default;
  /// Takes ownership of probs; validates length, nonnegativity and normalization.
  Pmf(SupportGrid grid, std::vector<double> probs);

  const SupportGrid& grid() const { return grid_; }
  std::span<const double> probs() const { return probs_; }
  double operator[](std::size_t i) const { return probs_[i]; }
  double at(std::span<const std::int64_t> point) const { return probs_[grid_.flatten(point)]; }
  std::size_t size() const { return probs_.size(); }

  /// Divides by the sum. Throws unless the sum is already within tol of one.
  static Pmf renormalized(SupportGrid grid, std::vector<double> probs, double tol = 1e-9);
  /// Normalizes any nonnegative table with positive mass.
  static Pmf from_weights(SupportGrid grid, std::vector<double> weights);

 private:
  SupportGrid grid_;
  std::vector<double> probs_;
};

/// Function f evaluated at every support point.
struct Functional {
  std::vector<double> values;
};

/// Indicator vectors of the events A_1, ..., A_H.
struct EventSet {
  std::vector<std::vector<std::uint8_t>> events;
  std::size_t count() const { return events.size(); }
};

Pmf pmf_uniform(const SupportGrid& grid);

double functional_mean(const Pmf& p, const Functional& f);
double event_probability(const Pmf& p, std::span<const std::uint8_t> indicator);

/// Functional f(y) = y_j.
Functional coordinate_functional(const SupportGrid& grid, std::size_t j);
Functional indicator_functional(std::span<const std::uint8_t> indicator);

/// Sums out every coordinate not in keep; the result lives on grid.subgrid(keep).
Pmf marginal(const Pmf& p, std::span<const std::size_t> keep);

struct CoordValue {
  std::size_t coord;
  std::int64_t value;
};

/// Pmf over the free coordinates (in original order) given fixed values.
/// Fixing every coordinate yields a one-cell grid.
Pmf conditional(const Pmf& p, std::span<const CoordValue> fixed);

/// sqrt(1 - sum sqrt(p q)), clamped to [0, 1].
double hellinger(const Pmf& p, const Pmf& q);

std::vector<std::uint8_t> validate_event(const SupportGrid& grid, std::vector<std::uint8_t> indicator);

}  // namespace madseq
