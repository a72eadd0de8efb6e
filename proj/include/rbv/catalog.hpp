#pragma once

// Named closed-form families used to sample test functions, weights and
// exponents onto a grid.

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rbv/grid.hpp"

namespace rbv {

using Params = std::map<std::string, double>;

struct CatalogEntry {
  std::string name;
  FieldKind kind;
  std::vector<std::pair<std::string, double>> defaults;
  std::string description;
};

inline const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries = {
      {"constant", FieldKind::function, {{"value", 1.0}}, "f(x) = value"},
      {"linear", FieldKind::function, {{"slope", 1.0}, {"intercept", 0.0}, {"axis", 0.0}},
       "f(x) = intercept + slope * x[axis]"},
      {"hat", FieldKind::function, {{"height", 1.0}, {"width", 1.0}},
       "f(x) = height * max(0, 1 - |x| / width)"},
      {"power", FieldKind::function, {{"beta", 2.0}}, "f(x) = |x|^beta"},
      {"bump", FieldKind::function, {{"height", 1.0}, {"radius", 1.0}},
       "f(x) = height * exp(1 - 1 / (1 - |x/radius|^2)) inside the ball, 0 outside"},
      {"sinusoid", FieldKind::function, {{"amplitude", 1.0}, {"frequency", 1.0}, {"phase", 0.0}, {"axis", 0.0}},
       "f(x) = amplitude * sin(pi * frequency * x[axis] + phase)"},
      {"step", FieldKind::function, {{"left", 1.0}, {"right", 2.0}, {"at", 0.5}, {"axis", 0.0}},
       "f(x) = left if x[axis] <= at else right"},
      {"constant_weight", FieldKind::weight, {{"value", 1.0}}, "w(x) = value"},
      {"power_weight", FieldKind::weight, {{"alpha", 0.5}},
       "w(x) = |x|^alpha; the origin node carries the cell mean of w (alpha < 0) or the harmonic cell mean (0 < alpha < dim)"},
      {"step_weight", FieldKind::weight, {{"base", 1.0}, {"jump", 1.0}, {"lo", 0.0}, {"hi", 0.5}, {"axis", 0.0}},
       "w(x) = base + jump * indicator(lo <= x[axis] <= hi)"},
  };
  return entries;
}

inline const CatalogEntry* find_catalog_entry(std::string_view name) {
  for (const auto& e : catalog())
    if (e.name == name) return &e;
  return nullptr;
}

namespace detail {

/// Average of |x|^alpha over the cell [-h/2, h/2]^n, for alpha > -n.
/// In 1D this is closed form. Otherwise the scaling I(a) = a^(n+alpha) I(1)
/// reduces it to the integral over the smooth shell [-1,1]^n \ [-1/2,1/2]^n.
inline double singular_cell_average(int dim, double alpha, double h) {
  if (dim == 1) return std::pow(h / 2.0, alpha) / (alpha + 1.0);
  const int m = 128;  // sub-cells per axis on [-1, 1]; m/4 sub-cells span the inner cube
  const double d = 2.0 / m;
  double shell = 0.0;
  const int inner_lo = m / 4;
  const int inner_hi = 3 * m / 4;
  auto inner = [&](int i) { return i >= inner_lo && i < inner_hi; };
  const int kmax = dim == 3 ? m : 1;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < kmax; ++k) {
        if (inner(i) && inner(j) && (dim == 2 || inner(k))) continue;
        const double x = -1.0 + (i + 0.5) * d;
        const double y = -1.0 + (j + 0.5) * d;
        const double z = dim == 3 ? -1.0 + (k + 0.5) * d : 0.0;
        shell += std::pow(std::sqrt(x * x + y * y + z * z), alpha);
      }
  shell *= std::pow(d, dim);
  const double unit = shell / (1.0 - std::pow(2.0, -(dim + alpha)));  // integral over [-1,1]^n
  const double a = h / 2.0;
  return std::pow(a, dim + alpha) * unit / std::pow(h, dim);
}

inline double param(const Params& given, const CatalogEntry& entry, const std::string& key) {
  if (auto it = given.find(key); it != given.end()) return it->second;
  for (const auto& [k, v] : entry.defaults)
    if (k == key) return v;
  throw Error(ErrorCode::bad_params, "missing parameter " + key);
}

inline int axis_param(const Params& given, const CatalogEntry& entry, int dim) {
  const double a = param(given, entry, "axis");
  require(a >= 0 && a < dim && a == std::floor(a), ErrorCode::bad_params, "axis out of range");
  return static_cast<int>(a);
}

}  // namespace detail

/// Samples a catalog family at every node of the grid.
inline SampledField sample_catalog(const GridPtr& grid, std::string_view name, const Params& params = {}) {
  const CatalogEntry* entry = find_catalog_entry(name);
  require(entry != nullptr, ErrorCode::unknown_catalog_entry, "no catalog entry named '" + std::string(name) + "'");
  for (const auto& [key, value] : params) {
    bool known = false;
    for (const auto& [k, v] : entry->defaults) known = known || (k == key);
    require(known, ErrorCode::bad_params, "entry '" + entry->name + "' has no parameter '" + key + "'");
    require(std::isfinite(value), ErrorCode::bad_params, "parameter '" + key + "' is not finite");
  }
  const int dim = grid->dim();
  auto get = [&](const std::string& key) { return detail::param(params, *entry, key); };
  std::vector<double> v(grid->size(), 0.0);
  const std::string& n = entry->name;

  auto fill = [&](auto&& fn) {
    for (std::size_t i = 0; i < grid->size(); ++i) v[i] = fn(grid->coord(i));
  };

  if (n == "constant" || n == "constant_weight") {
    const double c = get("value");
    if (entry->kind == FieldKind::weight) require(c >= 0.0, ErrorCode::bad_params, "weight value must be >= 0");
    fill([&](const Point&) { return c; });
  } else if (n == "linear") {
    const double slope = get("slope"), b = get("intercept");
    const int axis = detail::axis_param(params, *entry, dim);
    fill([&](const Point& x) { return b + slope * x[axis]; });
  } else if (n == "hat") {
    const double height = get("height"), width = get("width");
    require(width > 0.0, ErrorCode::bad_params, "hat width must be positive");
    fill([&](const Point& x) { return height * std::max(0.0, 1.0 - norm(x, dim) / width); });
  } else if (n == "power") {
    const double beta = get("beta");
    fill([&](const Point& x) { return std::pow(norm(x, dim), beta); });
  } else if (n == "bump") {
    const double height = get("height"), radius = get("radius");
    require(radius > 0.0, ErrorCode::bad_params, "bump radius must be positive");
    fill([&](const Point& x) {
      const double r = norm(x, dim) / radius;
      return r < 1.0 ? height * std::exp(1.0 - 1.0 / (1.0 - r * r)) : 0.0;
    });
  } else if (n == "sinusoid") {
    const double a = get("amplitude"), nu = get("frequency"), phase = get("phase");
    const int axis = detail::axis_param(params, *entry, dim);
    fill([&](const Point& x) { return a * std::sin(std::numbers::pi * nu * x[axis] + phase); });
  } else if (n == "step") {
    const double left = get("left"), right = get("right"), at = get("at");
    const int axis = detail::axis_param(params, *entry, dim);
    fill([&](const Point& x) { return x[axis] <= at ? left : right; });
  } else if (n == "power_weight") {
    const double alpha = get("alpha");
    require(alpha > -dim, ErrorCode::bad_params, "power weight needs alpha > -dim to be locally integrable");
    const double h = grid->spacing();
    // Origin node: cell mean of whichever of w, 1/w is singular there.
    double singular = 1.0;
    if (alpha < 0.0) singular = detail::singular_cell_average(dim, alpha, h);
    else if (alpha > 0.0) singular = alpha < dim ? 1.0 / detail::singular_cell_average(dim, -alpha, h) : 0.0;
    fill([&](const Point& x) {
      const double r = norm(x, dim);
      if (r < grid->geom_eps()) return singular;
      return std::pow(r, alpha);
    });
  } else if (n == "step_weight") {
    const double base = get("base"), jump = get("jump"), lo = get("lo"), hi = get("hi");
    const int axis = detail::axis_param(params, *entry, dim);
    require(base >= 0.0 && base + jump >= 0.0, ErrorCode::bad_params, "step weight would be negative");
    fill([&](const Point& x) { return x[axis] >= lo && x[axis] <= hi ? base + jump : base; });
  }

  for (std::size_t i = 0; i < v.size(); ++i)
    if (grid->masked(i))
      require(std::isfinite(v[i]), ErrorCode::bad_params,
              "entry '" + n + "' is not finite at node " + std::to_string(i));
  return {grid, std::move(v), entry->kind};
}

}  // namespace rbv
