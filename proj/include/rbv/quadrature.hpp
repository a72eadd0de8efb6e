#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rbv/grid.hpp"

namespace rbv {

/// Node-sum quadrature: sum of values at masked-in nodes in the region times h^n.
inline double riemann_integral(const SampledField& field, const Region& region) {
  const auto nodes = region_nodes(field.grid(), region);
  require(!nodes.empty(), ErrorCode::empty_region, "no masked-in node in region");
  double sum = 0.0;
  for (auto i : nodes) sum += field[i];
  return sum * field.grid().cell_volume();
}

/// w(E) = integral of w over E.
inline double weighted_measure(const SampledField& w, const Region& region) {
  require(w.kind() == FieldKind::weight, ErrorCode::precondition, "weighted_measure needs a weight field");
  return riemann_integral(w, region);
}

/// Lebesgue measure of the sampled region (node count times h^n).
inline double region_measure(const Grid& grid, const Region& region) {
  return static_cast<double>(region_nodes(grid, region).size()) * grid.cell_volume();
}

inline double oscillation_on(const SampledField& f, const std::vector<std::size_t>& nodes) {
  require(!nodes.empty(), ErrorCode::empty_region, "no masked-in node in region");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (auto i : nodes) {
    lo = std::min(lo, f[i]);
    hi = std::max(hi, f[i]);
  }
  return hi - lo;
}

/// osc_E(f) = max - min over sampled nodes of E.
inline double oscillation(const SampledField& f, const Region& region) {
  return oscillation_on(f, region_nodes(f.grid(), region));
}

inline std::size_t stride(const Grid& grid, int axis) {
  std::size_t s = 1;
  for (int i = max_dim - 1; i > axis; --i) s *= grid.shape()[i];
  return s;
}

/// Difference gradient, one field per axis. Central differences where both
/// axis neighbours are masked-in, one-sided otherwise.
inline std::vector<SampledField> gradient_fd(const SampledField& f) {
  const Grid& grid = f.grid();
  const double h = grid.spacing();
  std::vector<SampledField> out;
  out.reserve(grid.dim());
  for (int axis = 0; axis < grid.dim(); ++axis) {
    const std::size_t s = stride(grid, axis);
    std::vector<double> d(grid.size(), 0.0);
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
      if (!grid.masked(idx)) continue;
      const auto k = grid.multi_index(idx);
      const bool has_prev = k[axis] > 0 && grid.masked(idx - s);
      const bool has_next = k[axis] + 1 < grid.shape()[axis] && grid.masked(idx + s);
      if (has_prev && has_next) {
        d[idx] = (f[idx + s] - f[idx - s]) / (2.0 * h);
      } else if (has_next) {
        d[idx] = (f[idx + s] - f[idx]) / h;
      } else if (has_prev) {
        d[idx] = (f[idx] - f[idx - s]) / h;
      } else {
        throw Error(ErrorCode::isolated_node,
                    "node " + std::to_string(idx) + " has no masked-in neighbour along axis " + std::to_string(axis));
      }
    }
    out.emplace_back(f.grid_ptr(), std::move(d), FieldKind::function);
  }
  return out;
}

/// Euclidean norm of a gradient, nodewise.
inline SampledField gradient_magnitude(const std::vector<SampledField>& grad) {
  require(!grad.empty(), ErrorCode::precondition, "empty gradient");
  std::vector<double> v(grad.front().values().size(), 0.0);
  for (const auto& g : grad)
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += g[i] * g[i];
  for (auto& x : v) x = std::sqrt(x);
  return {grad.front().grid_ptr(), std::move(v), FieldKind::function};
}

}  // namespace rbv
