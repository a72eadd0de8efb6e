#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rbv/grid.hpp"
#include "rbv/packing.hpp"
#include "rbv/quadrature.hpp"
#include "rbv/report.hpp"

namespace rbv {

/// Weighted Riesz p-variation estimated over the candidate set built from
/// `radii`: sup over disjoint packings of sum (osc_B f / r)^p w(B), to the 1/p.
/// The result is a lower bound of the true supremum.
inline PackingSolution riesz_variation(const SampledField& f, const SampledField& w, double p,
                                       const std::vector<double>& radii, PackingMethod method,
                                       std::size_t max_iters = 10000) {
  require(p >= 1.0, ErrorCode::precondition, "riesz_variation needs p >= 1");
  require(method != PackingMethod::dp_1d_exact || f.grid().dim() == 1, ErrorCode::precondition,
          "dp_1d_exact is only available in one dimension");
  require_same_grid(f, w);
  const auto balls = candidate_balls(f.grid(), radii);
  const auto cands = score_candidates(f, w, balls, p);
  auto sol = pack(cands, method, max_iters);
  require(pairwise_disjoint(sol.collection, f.grid().dim()), ErrorCode::precondition,
          "packing optimizer returned overlapping balls");
  return sol;
}

/// Scores a fixed disjoint collection (used for seminorm checks on a shared packing).
inline PackingSolution evaluate_packing(const SampledField& f, const SampledField& w, std::span<const Ball> balls,
                                        double p) {
  require(pairwise_disjoint(balls, f.grid().dim()), ErrorCode::precondition, "collection is not disjoint");
  for (const auto& b : balls)
    require(ball_inside_domain(f.grid(), b), ErrorCode::precondition, "collection ball leaves the domain");
  ScoredCandidates cands = score_candidates(f, w, balls, p);
  std::vector<std::size_t> all(balls.size());
  for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
  return make_solution(cands, std::move(all), PackingMethod::greedy);
}

/// Masked-in nodes of a 1D grid in increasing order.
inline std::vector<std::size_t> finest_partition(const Grid& grid) {
  require(grid.dim() == 1, ErrorCode::precondition, "partitions are one-dimensional");
  return region_nodes(grid, WholeDomain{});
}

/// sum_j |f(x_j) - f(x_{j-1})|^p / |x_j - x_{j-1}|^(p-1) over the partition nodes.
inline double classical_riesz_1d(const SampledField& f, double p, std::span<const std::size_t> partition) {
  const Grid& g = f.grid();
  require(g.dim() == 1, ErrorCode::precondition, "classical_riesz_1d needs dim = 1");
  require(p >= 1.0, ErrorCode::precondition, "classical_riesz_1d needs p >= 1");
  for (std::size_t j = 0; j < partition.size(); ++j) {
    require(partition[j] < g.size() && g.masked(partition[j]), ErrorCode::bad_partition,
            "partition node outside the domain");
    if (j > 0)
      require(partition[j] > partition[j - 1], ErrorCode::bad_partition, "partition is not strictly increasing");
  }
  double sum = 0.0;
  for (std::size_t j = 1; j < partition.size(); ++j) {
    const double df = std::abs(f[partition[j]] - f[partition[j - 1]]);
    const double dx = g.coord(partition[j])[0] - g.coord(partition[j - 1])[0];
    sum += std::pow(df, p) / std::pow(dx, p - 1.0);
  }
  return sum;
}

struct LipschitzField {
  SampledField values;
  double shell_radius = 0.0;
};

/// L_f(x) ~ max over masked-in nodes y with 0 < |y - x| <= shell_radius of
/// |f(x) - f(y)| / |x - y|.
inline LipschitzField lipschitz_field(const SampledField& f, double shell_radius) {
  const Grid& g = f.grid();
  require(shell_radius >= g.spacing() * (1.0 - 1e-12), ErrorCode::precondition,
          "shell radius must be at least the grid spacing");
  std::vector<double> out(g.size(), 0.0);
  const double reach = shell_radius + g.geom_eps();
  parallel::parallel_for(g.size(), [&](std::size_t idx) {
    if (!g.masked(idx)) return;
    const Point x = g.coord(idx);
    Point lo{}, hi{};
    for (int i = 0; i < g.dim(); ++i) {
      lo[i] = x[i] - shell_radius;
      hi[i] = x[i] + shell_radius;
    }
    double best = 0.0;
    g.for_each_in_box(g.index_box(lo, hi), [&](std::size_t j) {
      if (j == idx || !g.masked(j)) return;
      const double d = distance(g.coord(j), x, g.dim());
      if (d <= reach) best = std::max(best, std::abs(f[j] - f[idx]) / d);
    });
    out[idx] = best;
  });
  return {SampledField(f.grid_ptr(), std::move(out), FieldKind::function), shell_radius};
}

/// Masked-in nodes with a missing or masked-out axis neighbour.
inline std::vector<std::size_t> boundary_nodes(const Grid& g) {
  std::vector<std::size_t> out;
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    if (!g.masked(idx)) continue;
    const auto k = g.multi_index(idx);
    bool edge = false;
    for (int axis = 0; axis < g.dim() && !edge; ++axis) {
      const std::size_t s = stride(g, axis);
      edge = k[axis] == 0 || k[axis] + 1 == g.shape()[axis] || !g.masked(idx - s) || !g.masked(idx + s);
    }
    if (edge) out.push_back(idx);
  }
  return out;
}

struct WeakTypeOptions {
  std::vector<double> radii;
  std::vector<double> t_grid;  // empty: 64 levels evenly spaced below max L_f
  double shell_radius = 0.0;   // 0: three grid spacings
  double k_max = 0.0;          // 0: 32 * 2^p
  PackingMethod method = PackingMethod::dp_1d_exact;
};

struct WeakTypeResult {
  double variation = 0.0;  // V_p estimate
  std::vector<double> t;
  std::vector<double> level_mass;  // w({L_f > t})
  std::vector<double> k;           // t^p w({L_f > t}) / V_p^p
  double max_k = 0.0;
  double k_max = 0.0;
  bool pass = false;
  std::vector<ReportRow> rows;
};

/// Weak-type statistic for the local Lipschitz constant:
/// K(t) = t^p w({L_f > t}) / V_p(f)^p, judged against k_max.
/// f must vanish on the domain boundary (compact support inside the domain).
inline WeakTypeResult weak_type_check(const SampledField& f, const SampledField& w, double p,
                                      const WeakTypeOptions& opts, const std::string& experiment = "weak_type") {
  const Grid& g = f.grid();
  require_same_grid(f, w);
  double scale = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.masked(i)) scale = std::max(scale, std::abs(f[i]));
  for (auto i : boundary_nodes(g))
    require(std::abs(f[i]) <= 1e-12 * std::max(1.0, scale), ErrorCode::precondition,
            "weak_type_check needs f to vanish on the domain boundary");

  WeakTypeResult res;
  res.k_max = opts.k_max > 0.0 ? opts.k_max : 32.0 * std::pow(2.0, p);
  const double shell = opts.shell_radius > 0.0 ? opts.shell_radius : 3.0 * g.spacing();
  const auto lip = lipschitz_field(f, shell);
  const auto sol = riesz_variation(f, w, p, opts.radii, opts.method);
  res.variation = sol.variation;

  double max_l = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.masked(i)) max_l = std::max(max_l, lip.values[i]);
  res.t = opts.t_grid;
  if (res.t.empty() && max_l > 0.0)
    for (int k = 1; k <= 64; ++k) res.t.push_back(max_l * k / 64.0 * (1.0 - 1e-9));

  const double h_n = g.cell_volume();
  for (double t : res.t) {
    require(t > 0.0, ErrorCode::precondition, "levels t must be positive");
    double mass = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g.masked(i) && lip.values[i] > t) {
        mass += w[i];
        ++count;
      }
    }
    mass *= h_n;
    double k = 0.0;
    if (sol.total > 0.0) {
      k = std::pow(t, p) * mass / sol.total;
    } else {
      require(count == 0, ErrorCode::zero_variation, "variation is zero but a level set is nonempty");
    }
    res.level_mass.push_back(mass);
    res.k.push_back(k);
    res.max_k = std::max(res.max_k, k);
  }
  res.pass = res.max_k <= res.k_max;

  const auto base = std::vector<std::pair<std::string, double>>{{"p", p}, {"shell", shell}, {"h", g.spacing()}};
  res.rows.push_back({experiment, "variation", params_string(base), res.variation, 0.0, Status::info, 0.0});
  for (std::size_t j = 0; j < res.t.size(); ++j) {
    auto kv = base;
    kv.emplace_back("t", res.t[j]);
    res.rows.push_back({experiment, "K(t)", params_string(kv), res.k[j], 0.0, Status::info, 0.0});
  }
  res.rows.push_back({experiment, "max_K", params_string(base), res.max_k, res.k_max,
                      res.pass ? Status::pass : Status::fail, 0.0});
  return res;
}

/// Fraction of masked-in nodes with L_f > m, for each m. Differentiability
/// surrogate: should tend to zero as m grows.
inline std::vector<double> lipschitz_tail_fractions(const LipschitzField& lip, std::span<const double> levels) {
  const Grid& g = lip.values.grid();
  std::vector<double> out;
  for (double m : levels) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g.masked(i) && lip.values[i] > m) ++count;
    out.push_back(static_cast<double>(count) / static_cast<double>(g.masked_count()));
  }
  return out;
}

}  // namespace rbv
