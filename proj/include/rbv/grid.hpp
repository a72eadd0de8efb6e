#pragma once

// Uniform grids over masked box domains, sampled fields, and the ball/cube
// regions every estimator in the library is built on.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rbv/error.hpp"

namespace rbv {

inline constexpr int max_dim = 3;

using Point = std::array<double, max_dim>;
using Shape = std::array<std::size_t, max_dim>;
using MultiIndex = std::array<std::size_t, max_dim>;

inline double distance(const Point& a, const Point& b, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double norm(const Point& a, int dim) { return distance(a, Point{}, dim); }

/// Open ball B(center, radius).
struct Ball {
  Point center{};
  double radius = 0.0;

  friend bool operator==(const Ball&, const Ball&) = default;
};

/// Axis-parallel cube [corner, corner + side)^n. Half-open so that dyadic
/// tilings partition the nodes.
struct Cube {
  Point corner{};
  double side = 0.0;

  friend bool operator==(const Cube&, const Cube&) = default;
};

struct WholeDomain {};

/// Explicit node subset (indices into the grid).
struct NodeList {
  std::vector<std::size_t> nodes;
};

using Region = std::variant<WholeDomain, Ball, Cube, NodeList>;

class Grid {
 public:
  Grid(int dim, const Point& origin, double spacing, const Shape& shape, std::vector<std::uint8_t> mask)
      : dim_(dim), origin_(origin), spacing_(spacing), shape_(shape), mask_(std::move(mask)) {
    require(dim_ >= 1 && dim_ <= max_dim, ErrorCode::precondition, "dim must be 1, 2 or 3");
    require(std::isfinite(spacing_) && spacing_ > 0.0, ErrorCode::precondition,
            "spacing must be positive and finite");
    for (int i = 0; i < max_dim; ++i) {
      if (i < dim_) {
        require(shape_[i] >= 2, ErrorCode::bad_shape,
                "axis " + std::to_string(i) + " has fewer than 2 nodes");
      } else {
        shape_[i] = 1;
        origin_[i] = 0.0;
      }
    }
    size_ = shape_[0] * shape_[1] * shape_[2];
    require(mask_.size() == size_, ErrorCode::bad_shape, "mask size does not match shape");
    for (auto m : mask_) masked_count_ += (m != 0);
    require(masked_count_ > 0, ErrorCode::empty_domain, "no node lies inside the domain");
  }

  int dim() const { return dim_; }
  const Point& origin() const { return origin_; }
  double spacing() const { return spacing_; }
  const Shape& shape() const { return shape_; }
  std::size_t size() const { return size_; }
  std::size_t masked_count() const { return masked_count_; }
  bool all_masked() const { return masked_count_ == size_; }
  bool masked(std::size_t idx) const { return mask_[idx] != 0; }
  std::span<const std::uint8_t> mask() const { return mask_; }

  /// h^n, the quadrature weight of one node.
  double cell_volume() const { return std::pow(spacing_, dim_); }

  /// Tolerance for geometric comparisons of node coordinates.
  double geom_eps() const { return 1e-9 * spacing_; }

  MultiIndex multi_index(std::size_t idx) const {
    MultiIndex k{};
    for (int i = max_dim - 1; i >= 0; --i) {
      k[i] = idx % shape_[i];
      idx /= shape_[i];
    }
    return k;
  }

  std::size_t flat_index(const MultiIndex& k) const { return (k[0] * shape_[1] + k[1]) * shape_[2] + k[2]; }

  Point coord(const MultiIndex& k) const {
    Point x{};
    for (int i = 0; i < dim_; ++i) x[i] = origin_[i] + spacing_ * static_cast<double>(k[i]);
    return x;
  }

  Point coord(std::size_t idx) const { return coord(multi_index(idx)); }

  /// Corner of the node bounding box opposite the origin.
  Point upper() const {
    Point x{};
    for (int i = 0; i < dim_; ++i) x[i] = origin_[i] + spacing_ * static_cast<double>(shape_[i] - 1);
    return x;
  }

  bool box_inside(const Point& lo, const Point& hi) const {
    const Point up = upper();
    for (int i = 0; i < dim_; ++i) {
      if (lo[i] < origin_[i] - geom_eps() || hi[i] > up[i] + geom_eps()) return false;
    }
    return true;
  }

  /// Inclusive index box [lo, hi] per axis; empty when any axis is empty.
  struct IndexBox {
    MultiIndex lo{};
    MultiIndex hi{};
    bool empty = false;
  };

  /// Nodes whose coordinates lie in the closed box [lo, hi] (up to geom_eps).
  IndexBox index_box(const Point& lo, const Point& hi) const {
    IndexBox box;
    for (int i = 0; i < max_dim; ++i) {
      if (i >= dim_) {
        box.lo[i] = box.hi[i] = 0;
        continue;
      }
      const double a = std::ceil((lo[i] - origin_[i]) / spacing_ - 1e-9);
      const double b = std::floor((hi[i] - origin_[i]) / spacing_ + 1e-9);
      const double last = static_cast<double>(shape_[i] - 1);
      const double ca = std::max(a, 0.0);
      const double cb = std::min(b, last);
      if (ca > cb) {
        box.empty = true;
        return box;
      }
      box.lo[i] = static_cast<std::size_t>(ca);
      box.hi[i] = static_cast<std::size_t>(cb);
    }
    return box;
  }

  /// Visits flat indices of an index box in lexicographic order.
  template <class Fn>
  void for_each_in_box(const IndexBox& box, Fn&& fn) const {
    if (box.empty) return;
    for (std::size_t i = box.lo[0]; i <= box.hi[0]; ++i)
      for (std::size_t j = box.lo[1]; j <= box.hi[1]; ++j)
        for (std::size_t k = box.lo[2]; k <= box.hi[2]; ++k) fn(flat_index({i, j, k}));
  }

 private:
  int dim_;
  Point origin_;
  double spacing_;
  Shape shape_;
  std::vector<std::uint8_t> mask_;
  std::size_t size_ = 0;
  std::size_t masked_count_ = 0;
};

using GridPtr = std::shared_ptr<const Grid>;

inline bool same_geometry(const Grid& a, const Grid& b) {
  return a.dim() == b.dim() && a.origin() == b.origin() && a.spacing() == b.spacing() && a.shape() == b.shape();
}

/// Builds a grid whose mask is the domain predicate evaluated at each node.
/// An empty predicate keeps every node.
inline GridPtr build_grid(int dim, const Point& origin, double spacing, const Shape& shape,
                          const std::function<bool(const Point&)>& inside = {}) {
  require(dim >= 1 && dim <= max_dim, ErrorCode::precondition, "dim must be 1, 2 or 3");
  Shape full = shape;
  for (int i = 0; i < max_dim; ++i) {
    if (i >= dim) full[i] = 1;
    else require(full[i] >= 2, ErrorCode::bad_shape, "axis " + std::to_string(i) + " has fewer than 2 nodes");
  }
  require(std::isfinite(spacing) && spacing > 0.0, ErrorCode::precondition, "spacing must be positive and finite");
  // A throwaway grid with a full mask gives coordinate arithmetic for the predicate.
  const std::size_t n = full[0] * full[1] * full[2];
  Grid geometry(dim, origin, spacing, full, std::vector<std::uint8_t>(n, 1));
  std::vector<std::uint8_t> mask(n, 1);
  if (inside) {
    for (std::size_t idx = 0; idx < n; ++idx) mask[idx] = inside(geometry.coord(idx)) ? 1 : 0;
  }
  return std::make_shared<const Grid>(dim, origin, spacing, full, std::move(mask));
}

/// Same geometry as `grid`, different mask.
inline GridPtr with_mask(const Grid& grid, std::vector<std::uint8_t> mask) {
  return std::make_shared<const Grid>(grid.dim(), grid.origin(), grid.spacing(), grid.shape(), std::move(mask));
}

/// Masked-in nodes strictly inside the open ball, lexicographic order.
inline std::vector<std::size_t> node_set(const Grid& grid, const Ball& ball) {
  std::vector<std::size_t> out;
  Point lo{}, hi{};
  for (int i = 0; i < grid.dim(); ++i) {
    lo[i] = ball.center[i] - ball.radius;
    hi[i] = ball.center[i] + ball.radius;
  }
  const double limit = ball.radius - grid.geom_eps();
  grid.for_each_in_box(grid.index_box(lo, hi), [&](std::size_t idx) {
    if (grid.masked(idx) && distance(grid.coord(idx), ball.center, grid.dim()) < limit) out.push_back(idx);
  });
  return out;
}

inline std::vector<std::size_t> cube_nodes(const Grid& grid, const Cube& cube) {
  std::vector<std::size_t> out;
  Point lo{}, hi{};
  for (int i = 0; i < grid.dim(); ++i) {
    lo[i] = cube.corner[i];
    // Half-open upper face: shrink by slightly more than the index tolerance.
    hi[i] = cube.corner[i] + cube.side - 2.0 * grid.geom_eps();
  }
  grid.for_each_in_box(grid.index_box(lo, hi), [&](std::size_t idx) {
    if (grid.masked(idx)) out.push_back(idx);
  });
  return out;
}

inline std::vector<std::size_t> region_nodes(const Grid& grid, const Region& region) {
  return std::visit(
      [&](const auto& r) -> std::vector<std::size_t> {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, WholeDomain>) {
          std::vector<std::size_t> out;
          out.reserve(grid.masked_count());
          for (std::size_t i = 0; i < grid.size(); ++i)
            if (grid.masked(i)) out.push_back(i);
          return out;
        } else if constexpr (std::is_same_v<R, Ball>) {
          return node_set(grid, r);
        } else if constexpr (std::is_same_v<R, Cube>) {
          return cube_nodes(grid, r);
        } else {
          std::vector<std::size_t> out;
          for (auto i : r.nodes)
            if (i < grid.size() && grid.masked(i)) out.push_back(i);
          return out;
        }
      },
      region);
}

/// Ball-in-domain test: bounding box inside the grid box and every node of
/// the ball masked-in.
inline bool ball_inside_domain(const Grid& grid, const Ball& ball) {
  Point lo{}, hi{};
  for (int i = 0; i < grid.dim(); ++i) {
    lo[i] = ball.center[i] - ball.radius;
    hi[i] = ball.center[i] + ball.radius;
  }
  if (!grid.box_inside(lo, hi)) return false;
  if (grid.all_masked()) return true;
  bool ok = true;
  const double limit = ball.radius - grid.geom_eps();
  grid.for_each_in_box(grid.index_box(lo, hi), [&](std::size_t idx) {
    if (ok && !grid.masked(idx) && distance(grid.coord(idx), ball.center, grid.dim()) < limit) ok = false;
  });
  return ok;
}

/// Closed disjointness: |c_i - c_j| >= r_i + r_j, with a relative rounding slack.
inline bool balls_disjoint(const Ball& a, const Ball& b, int dim) {
  const double reach = a.radius + b.radius;
  return distance(a.center, b.center, dim) >= reach * (1.0 - 1e-12);
}

inline bool pairwise_disjoint(std::span<const Ball> balls, int dim) {
  for (std::size_t i = 0; i < balls.size(); ++i)
    for (std::size_t j = i + 1; j < balls.size(); ++j)
      if (!balls_disjoint(balls[i], balls[j], dim)) return false;
  return true;
}

enum class FieldKind { function, weight };

/// Real values on every node of a grid. Only masked-in nodes carry meaning.
class SampledField {
 public:
  SampledField(GridPtr grid, std::vector<double> values, FieldKind kind = FieldKind::function)
      : grid_(std::move(grid)), values_(std::move(values)), kind_(kind) {
    require(grid_ != nullptr, ErrorCode::precondition, "field without grid");
    require(values_.size() == grid_->size(), ErrorCode::bad_shape, "value count does not match grid");
    for (std::size_t i = 0; i < values_.size(); ++i) {
      if (!grid_->masked(i)) continue;
      require(std::isfinite(values_[i]), ErrorCode::bad_params, "non-finite value at node " + std::to_string(i));
      if (kind_ == FieldKind::weight)
        require(values_[i] >= 0.0, ErrorCode::bad_params, "negative weight at node " + std::to_string(i));
    }
  }

  /// Skips validation; used where +inf is a meaningful value (dual weights).
  static SampledField unchecked(GridPtr grid, std::vector<double> values, FieldKind kind) {
    SampledField f;
    f.grid_ = std::move(grid);
    f.values_ = std::move(values);
    f.kind_ = kind;
    return f;
  }

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t idx) const { return values_[idx]; }
  FieldKind kind() const { return kind_; }

  SampledField with_values(std::vector<double> values) const { return {grid_, std::move(values), kind_}; }

  SampledField as_kind(FieldKind kind) const { return {grid_, values_, kind}; }

 private:
  SampledField() = default;

  GridPtr grid_;
  std::vector<double> values_;
  FieldKind kind_ = FieldKind::function;
};

inline void require_same_grid(const SampledField& a, const SampledField& b) {
  require(a.grid_ptr() == b.grid_ptr() || (same_geometry(a.grid(), b.grid()) &&
                                           std::equal(a.grid().mask().begin(), a.grid().mask().end(),
                                                      b.grid().mask().begin())),
          ErrorCode::precondition, "fields live on different grids");
}

/// a*f + b*g, nodewise.
inline SampledField linear_combination(double a, const SampledField& f, double b, const SampledField& g) {
  require_same_grid(f, g);
  std::vector<double> v(f.values().size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a * f[i] + b * g[i];
  return {f.grid_ptr(), std::move(v), FieldKind::function};
}

inline SampledField scaled(const SampledField& f, double a) {
  std::vector<double> v(f.values().begin(), f.values().end());
  for (auto& x : v) x *= a;
  return {f.grid_ptr(), std::move(v), a >= 0.0 ? f.kind() : FieldKind::function};
}

/// Reinterprets a field on a grid of identical geometry but a different
/// (typically smaller) mask.
inline SampledField restrict_to(const SampledField& f, GridPtr target) {
  require(same_geometry(f.grid(), *target), ErrorCode::precondition, "restrict_to needs identical geometry");
  return {std::move(target), std::vector<double>(f.values().begin(), f.values().end()), f.kind()};
}

}  // namespace rbv
