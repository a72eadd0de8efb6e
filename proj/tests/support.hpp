#pragma once

#include <cmath>
#include <functional>

#include "rbv/rbv.hpp"

namespace test {

/// Nodes lo, lo+h, ..., hi on a line.
inline rbv::GridPtr line(double lo, double hi, double h) {
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / h)) + 1;
  return rbv::build_grid(1, {lo, 0.0, 0.0}, h, {n, 1, 1});
}

inline rbv::GridPtr square(double lo, double hi, double h,
                           const std::function<bool(const rbv::Point&)>& inside = {}) {
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / h)) + 1;
  return rbv::build_grid(2, {lo, lo, 0.0}, h, {n, n, 1}, inside);
}

/// Samples fn at every node.
inline rbv::SampledField sample(const rbv::GridPtr& g, const std::function<double(const rbv::Point&)>& fn,
                                rbv::FieldKind kind = rbv::FieldKind::function) {
  std::vector<double> v(g->size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(g->coord(i));
  return {g, std::move(v), kind};
}

inline rbv::SampledField ones(const rbv::GridPtr& g) {
  return sample(g, [](const rbv::Point&) { return 1.0; }, rbv::FieldKind::weight);
}

/// Composite Simpson rule on [a, b] with m (even) panels.
inline double simpson(const std::function<double(double)>& fn, double a, double b, int m = 2000) {
  const double dx = (b - a) / m;
  double s = fn(a) + fn(b);
  for (int k = 1; k < m; ++k) s += fn(a + k * dx) * (k % 2 ? 4.0 : 2.0);
  return s * dx / 3.0;
}

}  // namespace test
