#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "madseq/error.hpp"
#include "madseq/grid.hpp"

namespace madseq {

/// Uniform proposal over {c - m, ..., c + m}; window points off the grid are lost mass.
struct UniformWindow {
  std::int64_t m = 0;
};

/// Rounded Gaussian proposal: cell y gets the N(c, sigma^2) mass of [y - 1/2, y + 1/2],
/// normalized over the coordinate range.
struct RoundedGaussian {
  double sigma = 1.0;
};

/// Binary proposal keeping the current value with probability 1 - delta.
struct BinaryFlip {
  double delta = 0.25;
};

/// Degenerate proposal at the center; recovers the Dirichlet-process update.
struct PointMass {};

using CoordKernel = std::variant<UniformWindow, RoundedGaussian, BinaryFlip, PointMass>;

/// Factorized base kernel: one component per grid coordinate.
struct BaseKernelSpec {
  std::vector<CoordKernel> coords;

  static BaseKernelSpec point_mass(std::size_t arity) { return {std::vector<CoordKernel>(arity, PointMass{})}; }
};

/// Rounded Gaussian cells further than this many bandwidths from the center get zero weight.
/// Their mass is below 1e-23 and dropping them bounds the proposal support.
inline constexpr double kRoundedGaussianTailSigmas = 10.0;

/// Bandwidth used for tie-breaking and reporting (sigma, m or delta; 0 for PointMass).
double bandwidth(const CoordKernel& k);
std::string describe(const CoordKernel& k);
std::string describe(const BaseKernelSpec& spec);

/// Unnormalized rounded Gaussian mass Phi((y + 1/2 - c)/sigma) - Phi((y - 1/2 - c)/sigma),
/// evaluated in the tail-accurate direction.
double rounded_gaussian_mass(double y, double center, double sigma);

/// Checks ranges of every component and compatibility with the grid.
void validate_kernel(const BaseKernelSpec& spec, const SupportGrid& grid);

struct BaseKernelRow {
  std::vector<double> weights;
  double off_grid_mass = 0.0;
};

BaseKernelRow base_kernel_row(const BaseKernelSpec& spec, const SupportGrid& grid,
                              std::span<const std::int64_t> center);

/// Metropolis-Hastings kernel row k(.|center) together with the acceptance weights used.
struct KernelRow {
  std::vector<double> probs;
  Point center;
  std::vector<double> acceptance;
};

/// Precomputed per-coordinate proposal tables and the accept/reject sweep shared by every
/// predictive update. Immutable after construction; safe for concurrent use.
class MhKernel {
 public:
  MhKernel(const SupportGrid& grid, const BaseKernelSpec& spec);

  const SupportGrid& grid() const { return grid_; }
  const BaseKernelSpec& spec() const { return spec_; }

  /// k*(y | c) for flat indices.
  double base(std::size_t y, std::size_t c) const;

  struct Sweep {
    double accepted_total = 0.0;   ///< sum of accepted mass over the proposal box, center included
    double center_accepted = 0.0;  ///< accepted mass computed at the center cell
  };

  /// Reusable buffers so sweeps do not allocate.
  struct Workspace {
    std::vector<double> forward, backward, scratch;
    std::vector<std::int64_t> center, cursor;
  };

  /// Visits every cell y in the support of k*(.|c) and calls sink(y, accepted, proposal) where
  /// accepted = min{k*(y|c), q(y) k*(c|y) / q(c)} and proposal = k*(y|c). q only needs to be
  /// proportional to the current pmf. The sink may modify q[y] for the cell it is handed;
  /// each cell is read before it is handed out.
  template <class Sink>
  Sweep sweep(std::span<const double> q, std::size_t c, Workspace& ws, Sink&& sink) const;

  /// Full row k(.|c) under pmf q, written into out (resized to the grid).
  void row(std::span<const double> q, std::size_t c, Workspace& ws, std::vector<double>& out) const;

 private:
  struct Table {
    std::size_t m = 0;
    std::vector<double> t;  // t[c * m + y] = k*(y | c)
    std::vector<std::int64_t> lo, hi;
    bool full(std::int64_t c) const { return lo[c] == 0 && hi[c] == static_cast<std::int64_t>(m) - 1; }
    double at(std::int64_t c, std::int64_t y) const { return t[static_cast<std::size_t>(c) * m + y]; }
  };

  void build_suffix(std::size_t first, Workspace& ws) const;

  SupportGrid grid_;
  BaseKernelSpec spec_;
  std::vector<Table> tables_;
};

KernelRow mh_kernel_row(const Pmf& p, const BaseKernelSpec& spec, std::span<const std::int64_t> y_obs);

/// K(A_h | y) = sum over x in A_h of k(x | y), for every event.
std::vector<double> kernel_event_row(const Pmf& p, const BaseKernelSpec& spec, const EventSet& events,
                                     std::span<const std::int64_t> y);

// ---------------------------------------------------------------------------

template <class Sink>
MhKernel::Sweep MhKernel::sweep(std::span<const double> q, std::size_t c, Workspace& ws, Sink&& sink) const {
  const std::size_t d = tables_.size();
  const double qc = q[c];
  if (!(qc > 0.0)) throw PreconditionError("predictive mass at the observed point must be positive");
  const double inv_qc = 1.0 / qc;

  ws.center.resize(d);
  for (std::size_t j = 0; j < d; ++j) ws.center[j] = grid_.coordinate_at(c, j);

  // Coordinates after `inner` have full windows and form one contiguous block of length L.
  std::size_t inner = d - 1;
  while (inner > 0 && tables_[inner].full(ws.center[inner])) --inner;
  build_suffix(inner + 1, ws);
  const std::size_t block = grid_.stride(inner);
  const double* fwd = ws.forward.data();
  const double* bwd = ws.backward.data();

  const Table& ti = tables_[inner];
  const std::int64_t ci = ws.center[inner];
  const std::size_t c_offset = c % block;

  Sweep out;
  ws.cursor.assign(inner, 0);
  for (std::size_t j = 0; j < inner; ++j) ws.cursor[j] = tables_[j].lo[ws.center[j]];
  while (true) {
    double of = 1.0, ob = inv_qc;
    std::size_t base = 0;
    bool on_center = true;
    for (std::size_t j = 0; j < inner; ++j) {
      of *= tables_[j].at(ws.center[j], ws.cursor[j]);
      ob *= tables_[j].at(ws.cursor[j], ws.center[j]);
      base += static_cast<std::size_t>(ws.cursor[j]) * grid_.stride(j);
      on_center = on_center && ws.cursor[j] == ws.center[j];
    }
    for (std::int64_t y = ti.lo[ci]; y <= ti.hi[ci]; ++y) {
      const double f = of * ti.at(ci, y);
      if (f == 0.0) continue;
      const double b = ob * ti.at(y, ci);
      const std::size_t off = base + static_cast<std::size_t>(y) * block;
      if (on_center && y == ci) out.center_accepted = std::min(f * fwd[c_offset], q[c] * (b * bwd[c_offset]));
      double acc = 0.0;
      for (std::size_t k = 0; k < block; ++k) {
        const double kf = f * fwd[k];
        const double a = std::min(kf, q[off + k] * (b * bwd[k]));
        acc += a;
        sink(off + k, a, kf);
      }
      out.accepted_total += acc;
    }
    // Odometer over the outer coordinates.
    std::size_t j = inner;
    while (j > 0) {
      --j;
      if (ws.cursor[j] < tables_[j].hi[ws.center[j]]) {
        ++ws.cursor[j];
        break;
      }
      ws.cursor[j] = tables_[j].lo[ws.center[j]];
      if (j == 0) return out;
    }
    if (inner == 0) return out;
  }
}

}  // namespace madseq
