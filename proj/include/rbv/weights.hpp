#pragma once

// Muckenhoupt, reverse-Hoelder and doubling constants of a sampled weight.
// The supremum over all cubes is replaced by a finite family, so every value
// returned here is a lower bound of the true constant.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rbv/grid.hpp"
#include "rbv/parallel.hpp"
#include "rbv/quadrature.hpp"

namespace rbv {

enum class CubeProvenance { dyadic, shifted_dyadic, exhaustive_grid };

inline std::string to_string(CubeProvenance p) {
  switch (p) {
    case CubeProvenance::dyadic: return "dyadic";
    case CubeProvenance::shifted_dyadic: return "shifted_dyadic";
    case CubeProvenance::exhaustive_grid: return "exhaustive_grid";
  }
  return "unknown";
}

struct CubeFamily {
  std::vector<Cube> cubes;
  CubeProvenance provenance = CubeProvenance::dyadic;
};

namespace detail {

inline void tile_cubes(const Grid& grid, double side, const Point& offset, std::vector<Cube>& out) {
  const Point up = grid.upper();
  std::array<std::size_t, max_dim> count{1, 1, 1};
  for (int i = 0; i < grid.dim(); ++i) {
    const double extent = up[i] - grid.origin()[i] - offset[i];
    const double c = std::floor(extent / side + 1e-9);
    if (c < 1.0) return;
    count[i] = static_cast<std::size_t>(c);
  }
  for (std::size_t a = 0; a < count[0]; ++a)
    for (std::size_t b = 0; b < count[1]; ++b)
      for (std::size_t c = 0; c < count[2]; ++c) {
        const std::array<std::size_t, max_dim> k{a, b, c};
        Cube cube;
        cube.side = side;
        Point hi{};
        for (int i = 0; i < grid.dim(); ++i) {
          cube.corner[i] = grid.origin()[i] + offset[i] + side * static_cast<double>(k[i]);
          hi[i] = cube.corner[i] + side;
        }
        if (!grid.box_inside(cube.corner, hi)) continue;
        if (cube_nodes(grid, cube).empty()) continue;
        out.push_back(cube);
      }
}

}  // namespace detail

/// Dyadic cubes of side min_side * 2^l (l < levels) tiled from the grid
/// origin, plus shifts-1 translated copies per level (copy j moved by
/// j * side / shifts along every axis; shifts = 2 is the half-side shift).
/// Cubes leaving the node bounding box or holding no masked-in node are dropped.
inline CubeFamily generate_cubes(const Grid& grid, double min_side, int levels, int shifts) {
  require(min_side >= grid.spacing() * (1.0 - 1e-12), ErrorCode::precondition, "min_side must be >= grid spacing");
  require(levels >= 1 && shifts >= 1, ErrorCode::precondition, "levels and shifts must be >= 1");
  CubeFamily family;
  family.provenance = shifts > 1 ? CubeProvenance::shifted_dyadic : CubeProvenance::dyadic;
  for (int level = 0; level < levels; ++level) {
    const double side = min_side * std::ldexp(1.0, level);
    for (int s = 0; s < shifts; ++s) {
      Point offset{};
      for (int i = 0; i < grid.dim(); ++i) offset[i] = side * s / shifts;
      detail::tile_cubes(grid, side, offset, family.cubes);
    }
  }
  require(!family.cubes.empty(), ErrorCode::no_cubes, "every candidate cube was clipped or empty");
  return family;
}

/// Dyadic family from 2h up to the shortest grid extent, with half-side shifts.
inline CubeFamily default_cube_family(const Grid& grid, int shifts = 2) {
  const Point up = grid.upper();
  double extent = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid.dim(); ++i) extent = std::min(extent, up[i] - grid.origin()[i]);
  const double min_side = 2.0 * grid.spacing();
  int levels = 1;
  while (min_side * std::ldexp(1.0, levels) <= extent * (1.0 + 1e-9)) ++levels;
  return generate_cubes(grid, min_side, levels, shifts);
}

/// Every cube with a node as corner and one of the given sides.
inline CubeFamily exhaustive_cubes(const Grid& grid, std::span<const double> sides) {
  CubeFamily family;
  family.provenance = CubeProvenance::exhaustive_grid;
  for (double side : sides) {
    require(side >= grid.spacing() * (1.0 - 1e-12), ErrorCode::precondition, "cube side must be >= grid spacing");
    for (std::size_t idx = 0; idx < grid.size(); ++idx) {
      Cube cube{grid.coord(idx), side};
      Point hi{};
      for (int i = 0; i < grid.dim(); ++i) hi[i] = cube.corner[i] + side;
      if (!grid.box_inside(cube.corner, hi) || cube_nodes(grid, cube).empty()) continue;
      family.cubes.push_back(cube);
    }
  }
  require(!family.cubes.empty(), ErrorCode::no_cubes, "every candidate cube was clipped or empty");
  return family;
}

namespace detail {

inline double mean_of(const SampledField& f, const std::vector<std::size_t>& nodes) {
  double s = 0.0;
  for (auto i : nodes) s += f[i];
  return s / static_cast<double>(nodes.size());
}

/// log <w^e>_Q, shifted by the largest term so that large exponents do not overflow.
inline double log_mean_power(const SampledField& w, const std::vector<std::size_t>& nodes, double e) {
  double top = -std::numeric_limits<double>::infinity();
  for (auto i : nodes) top = std::max(top, e * std::log(w[i]));
  if (std::isinf(top)) return top;
  double s = 0.0;
  for (auto i : nodes) s += std::exp(e * std::log(w[i]) - top);
  return top + std::log(s / static_cast<double>(nodes.size()));
}

inline void require_weight(const SampledField& w) {
  require(w.kind() == FieldKind::weight, ErrorCode::precondition, "expected a weight field");
}

inline double ap_on_cube(const SampledField& w, double p, const std::vector<std::size_t>& nodes) {
  const double mean = mean_of(w, nodes);
  require(mean > 0.0, ErrorCode::zero_weight_on_cube, "weight integrates to zero on a cube");
  const double log_dual = log_mean_power(w, nodes, 1.0 / (1.0 - p));
  if (std::isinf(log_dual)) return std::numeric_limits<double>::infinity();
  return mean * std::exp((p - 1.0) * log_dual);
}

template <class PerCube>
double sup_over_family(const SampledField& w, const CubeFamily& family, PerCube&& per_cube) {
  require(!family.cubes.empty(), ErrorCode::precondition, "empty cube family");
  const auto values = parallel::parallel_map<double>(family.cubes.size(), [&](std::size_t k) {
    const auto nodes = cube_nodes(w.grid(), family.cubes[k]);
    require(!nodes.empty(), ErrorCode::empty_region, "cube holds no masked-in node");
    return per_cube(nodes);
  });
  return *std::max_element(values.begin(), values.end());
}

}  // namespace detail

/// [w]_{A_p} = sup_Q <w>_Q <w^{1/(1-p)}>_Q^{p-1}. A zero node inside a cube of
/// positive mass makes the dual average infinite; that is returned as +inf.
inline double ap_constant(const SampledField& w, double p, const CubeFamily& family) {
  detail::require_weight(w);
  require(p > 1.0, ErrorCode::precondition, "ap_constant needs p > 1");
  return detail::sup_over_family(w, family, [&](const auto& nodes) { return detail::ap_on_cube(w, p, nodes); });
}

/// [w]_{A_1} = sup_Q <w>_Q * max_{x in Q} 1/w(x).
inline double a1_constant(const SampledField& w, const CubeFamily& family) {
  detail::require_weight(w);
  return detail::sup_over_family(w, family, [&](const auto& nodes) {
    const double mean = detail::mean_of(w, nodes);
    require(mean > 0.0, ErrorCode::zero_weight_on_cube, "weight integrates to zero on a cube");
    double lo = std::numeric_limits<double>::infinity();
    for (auto i : nodes) lo = std::min(lo, w[i]);
    return lo > 0.0 ? mean / lo : std::numeric_limits<double>::infinity();
  });
}

/// [w]_{RH_s} = sup_Q <w^s>_Q^{1/s} / <w>_Q.
inline double rh_constant(const SampledField& w, double s, const CubeFamily& family) {
  detail::require_weight(w);
  require(s > 1.0, ErrorCode::precondition, "rh_constant needs s > 1");
  return detail::sup_over_family(w, family, [&](const auto& nodes) {
    const double mean = detail::mean_of(w, nodes);
    require(mean > 0.0, ErrorCode::zero_weight_on_cube, "weight integrates to zero on a cube");
    return std::exp(detail::log_mean_power(w, nodes, s) / s) / mean;
  });
}

struct RwEstimate {
  double value = 0.0;
  bool bounded = false;  // false: the A_q constant never fell below the threshold on (1, q_max]
};

/// Smallest q (to within tol) with ap_constant(w, q) <= threshold, by
/// bisection on (1, q_max]; relies on q -> [w]_{A_q} being nonincreasing.
inline RwEstimate estimate_rw(const SampledField& w, const CubeFamily& family, double threshold, double tol,
                              double q_max = 64.0) {
  require(threshold > 1.0 && tol > 0.0 && q_max > 1.0, ErrorCode::precondition,
          "estimate_rw needs threshold > 1, tol > 0, q_max > 1");
  if (!(ap_constant(w, q_max, family) <= threshold)) return {q_max, false};
  double lo = 1.0, hi = q_max;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (ap_constant(w, mid, family) <= threshold) hi = mid;
    else lo = mid;
  }
  return {hi, true};
}

/// max over balls of w(2B) / w(B).
inline double doubling_constant(const SampledField& w, std::span<const Ball> balls) {
  detail::require_weight(w);
  require(!balls.empty(), ErrorCode::precondition, "empty ball family");
  const auto values = parallel::parallel_map<double>(balls.size(), [&](std::size_t k) {
    const Ball& b = balls[k];
    const double inner = weighted_measure(w, b);
    require(inner > 0.0, ErrorCode::zero_weight_on_ball, "w(B) = 0");
    return weighted_measure(w, Ball{b.center, 2.0 * b.radius}) / inner;
  });
  return *std::max_element(values.begin(), values.end());
}

struct DualWeight {
  SampledField sigma;                       // +inf at the flagged nodes
  std::vector<std::size_t> infinite_nodes;  // masked-in nodes where w = 0
};

/// sigma = w^{1/(1-q)} nodewise.
inline DualWeight dual_weight(const SampledField& w, double q) {
  detail::require_weight(w);
  require(q > 1.0, ErrorCode::precondition, "dual_weight needs q > 1");
  const Grid& g = w.grid();
  std::vector<double> v(g.size(), 0.0);
  std::vector<std::size_t> flagged;
  const double e = 1.0 / (1.0 - q);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g.masked(i)) continue;
    if (w[i] == 0.0) {
      v[i] = std::numeric_limits<double>::infinity();
      flagged.push_back(i);
    } else {
      v[i] = std::pow(w[i], e);
    }
  }
  return {SampledField::unchecked(w.grid_ptr(), std::move(v), FieldKind::weight), std::move(flagged)};
}

struct WeightDiagnostics {
  std::vector<std::pair<double, double>> ap_constant;  // (p, [w]_{A_p})
  double a1_constant = 0.0;
  std::vector<std::pair<double, double>> rh_constant;  // (s, [w]_{RH_s})
  double doubling_constant = 0.0;
  RwEstimate rw_estimate;
};

inline WeightDiagnostics diagnose_weight(const SampledField& w, const CubeFamily& family, std::span<const double> ps,
                                         std::span<const double> ss, std::span<const Ball> balls,
                                         double rw_threshold = 1e3, double rw_tol = 1e-3) {
  WeightDiagnostics d;
  for (double p : ps) d.ap_constant.emplace_back(p, ap_constant(w, p, family));
  d.a1_constant = a1_constant(w, family);
  for (double s : ss) d.rh_constant.emplace_back(s, rh_constant(w, s, family));
  if (!balls.empty()) d.doubling_constant = doubling_constant(w, balls);
  d.rw_estimate = estimate_rw(w, family, rw_threshold, rw_tol);
  return d;
}

}  // namespace rbv
