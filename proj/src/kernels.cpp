#include "madseq/kernels.hpp"

#include <cmath>
#include <sstream>

namespace madseq {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

}  // namespace

double rounded_gaussian_mass(double y, double center, double sigma) {
  const double lo = (y - 0.5 - center) / sigma;
  const double hi = (y + 0.5 - center) / sigma;
  if (lo >= 0.0) return upper_tail(lo) - upper_tail(hi);
  if (hi <= 0.0) return upper_tail(-hi) - upper_tail(-lo);
  return 1.0 - upper_tail(hi) - upper_tail(-lo);
}

double bandwidth(const CoordKernel& k) {
  return std::visit(overloaded{[](const UniformWindow& u) { return static_cast<double>(u.m); },
                               [](const RoundedGaussian& g) { return g.sigma; },
                               [](const BinaryFlip& b) { return b.delta; }, [](const PointMass&) { return 0.0; }},
                    k);
}

std::string describe(const CoordKernel& k) {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{[&](const UniformWindow& u) { os << "uniform(m=" << u.m << ")"; },
                        [&](const RoundedGaussian& g) { os << "rounded_gaussian(sigma=" << g.sigma << ")"; },
                        [&](const BinaryFlip& b) { os << "binary_flip(delta=" << b.delta << ")"; },
                        [&](const PointMass&) { os << "point_mass"; }},
             k);
  return os.str();
}

std::string describe(const BaseKernelSpec& spec) {
  std::string out;
  for (std::size_t j = 0; j < spec.coords.size(); ++j) {
    if (j) out += " x ";
    out += describe(spec.coords[j]);
  }
  return out;
}

void validate_kernel(const BaseKernelSpec& spec, const SupportGrid& grid) {
  if (spec.coords.size() != grid.arity()) throw ConfigError("kernel arity does not match grid arity");
  for (std::size_t j = 0; j < grid.arity(); ++j) {
    const bool binary = grid.coord(j).kind == CoordKind::Binary;
    std::visit(overloaded{[&](const UniformWindow& u) {
                            if (u.m < 0) throw ConfigError("uniform window half-width must be >= 0");
                            if (binary) throw ConfigError("uniform window kernel needs a count coordinate");
                          },
                          [&](const RoundedGaussian& g) {
                            if (!(g.sigma > 0.0) || !std::isfinite(g.sigma))
                              throw ConfigError("rounded gaussian bandwidth must be positive");
                            if (binary) throw ConfigError("rounded gaussian kernel needs a count coordinate");
                          },
                          [&](const BinaryFlip& b) {
                            if (!(b.delta >= 0.0 && b.delta <= 0.5)) throw ConfigError("binary flip delta must lie in [0, 0.5]");
                            if (!binary) throw ConfigError("binary flip kernel needs a binary coordinate");
                          },
                          [](const PointMass&) {}},
               spec.coords[j]);
  }
}

MhKernel::MhKernel(const SupportGrid& grid, const BaseKernelSpec& spec) : grid_(grid), spec_(spec) {
  validate_kernel(spec_, grid_);
  tables_.resize(grid_.arity());
  for (std::size_t j = 0; j < grid_.arity(); ++j) {
    Table& tb = tables_[j];
    const std::size_t m = grid_.coord(j).size();
    const auto last = static_cast<std::int64_t>(m) - 1;
    tb.m = m;
    tb.t.assign(m * m, 0.0);
    tb.lo.resize(m);
    tb.hi.resize(m);
    for (std::int64_t c = 0; c <= last; ++c) {
      double* row = tb.t.data() + static_cast<std::size_t>(c) * m;
      std::visit(overloaded{[&](const UniformWindow& u) {
                              tb.lo[c] = std::max<std::int64_t>(0, c - u.m);
                              tb.hi[c] = std::min<std::int64_t>(last, c + u.m);
                              const double w = 1.0 / static_cast<double>(2 * u.m + 1);
                              for (auto y = tb.lo[c]; y <= tb.hi[c]; ++y) row[y] = w;
                            },
                            [&](const RoundedGaussian& g) {
                              const auto reach = static_cast<std::int64_t>(std::ceil(kRoundedGaussianTailSigmas * g.sigma));
                              std::int64_t lo = std::max<std::int64_t>(0, c - reach);
                              std::int64_t hi = std::min<std::int64_t>(last, c + reach);
                              double z = 0.0;
                              for (auto y = lo; y <= hi; ++y) {
                                row[y] = rounded_gaussian_mass(static_cast<double>(y), static_cast<double>(c), g.sigma);
                                z += row[y];
                              }
                              for (auto y = lo; y <= hi; ++y) row[y] /= z;
                              // Shrink the window to cells with nonzero weight.
                              while (lo < c && row[lo] == 0.0) ++lo;
                              while (hi > c && row[hi] == 0.0) --hi;
                              tb.lo[c] = lo;
                              tb.hi[c] = hi;
                            },
                            [&](const BinaryFlip& b) {
                              row[0] = c == 0 ? 1.0 - b.delta : b.delta;
                              row[1] = c == 1 ? 1.0 - b.delta : b.delta;
                              tb.lo[c] = b.delta > 0.0 ? 0 : c;
                              tb.hi[c] = b.delta > 0.0 ? 1 : c;
                              if (b.delta == 0.0) row[1 - c] = 0.0;
                            },
                            [&](const PointMass&) {
                              row[c] = 1.0;
                              tb.lo[c] = tb.hi[c] = c;
                            }},
                 spec_.coords[j]);
    }
  }
}

double MhKernel::base(std::size_t y, std::size_t c) const {
  double v = 1.0;
  for (std::size_t j = 0; j < tables_.size(); ++j)
    v *= tables_[j].at(grid_.coordinate_at(c, j), grid_.coordinate_at(y, j));
  return v;
}

void MhKernel::build_suffix(std::size_t first, Workspace& ws) const {
  ws.forward.assign(1, 1.0);
  ws.backward.assign(1, 1.0);
  for (std::size_t j = first; j < tables_.size(); ++j) {
    const Table& tb = tables_[j];
    const std::int64_t cj = ws.center[j];
    const std::size_t n = ws.forward.size();
    ws.scratch.resize(n * tb.m);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t y = 0; y < tb.m; ++y) ws.scratch[a * tb.m + y] = ws.forward[a] * tb.at(cj, y);
    ws.forward.swap(ws.scratch);
    ws.scratch.resize(n * tb.m);
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t y = 0; y < tb.m; ++y) ws.scratch[a * tb.m + y] = ws.backward[a] * tb.at(y, cj);
    ws.backward.swap(ws.scratch);
  }
}

void MhKernel::row(std::span<const double> q, std::size_t c, Workspace& ws, std::vector<double>& out) const {
  out.assign(grid_.size(), 0.0);
  const Sweep s = sweep(q, c, ws, [&](std::size_t y, double a, double) { out[y] = a; });
  out[c] = 1.0 - (s.accepted_total - s.center_accepted);
}

BaseKernelRow base_kernel_row(const BaseKernelSpec& spec, const SupportGrid& grid,
                              std::span<const std::int64_t> center) {
  if (!grid.contains(center)) throw DataError("kernel center is outside the grid");
  MhKernel kernel(grid, spec);
  const std::size_t c = grid.flatten(center);
  BaseKernelRow out;
  out.weights.resize(grid.size());
  double in_grid = 0.0;
  for (std::size_t y = 0; y < grid.size(); ++y) {
    out.weights[y] = kernel.base(y, c);
    in_grid += out.weights[y];
  }
  out.off_grid_mass = std::max(0.0, 1.0 - in_grid);
  return out;
}

KernelRow mh_kernel_row(const Pmf& p, const BaseKernelSpec& spec, std::span<const std::int64_t> y_obs) {
  if (!p.grid().contains(y_obs)) throw DataError("observation is outside the grid");
  MhKernel kernel(p.grid(), spec);
  const std::size_t c = p.grid().flatten(y_obs);
  MhKernel::Workspace ws;
  KernelRow out;
  out.center.assign(y_obs.begin(), y_obs.end());
  out.probs.assign(p.size(), 0.0);
  out.acceptance.assign(p.size(), 0.0);
  const auto s = kernel.sweep(p.probs(), c, ws, [&](std::size_t y, double a, double kf) {
    out.probs[y] = a;
    out.acceptance[y] = kf > 0.0 ? std::min(1.0, a / kf) : 0.0;
  });
  out.probs[c] = 1.0 - (s.accepted_total - s.center_accepted);
  out.acceptance[c] = 1.0;
  return out;
}

std::vector<double> kernel_event_row(const Pmf& p, const BaseKernelSpec& spec, const EventSet& events,
                                     std::span<const std::int64_t> y) {
  const KernelRow row = mh_kernel_row(p, spec, y);
  std::vector<double> out(events.count(), 0.0);
  for (std::size_t h = 0; h < events.count(); ++h) {
    const auto& ind = events.events[h];
    if (ind.size() != p.size()) throw ConfigError("event is not defined on the pmf grid");
    for (std::size_t x = 0; x < p.size(); ++x)
      if (ind[x]) out[h] += row.probs[x];
  }
  return out;
}

}  // namespace madseq
