#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbv/grid.hpp"
#include "rbv/parallel.hpp"
#include "rbv/quadrature.hpp"
#include "rbv/report.hpp"
#include "rbv/rng.hpp"
#include "rbv/weights.hpp"

namespace rbv {

/// (sum |f|^p w h^n)^{1/p} over masked-in nodes of the region.
inline double weighted_lp_norm(const SampledField& f, const SampledField& w, double p,
                               const Region& region = WholeDomain{}) {
  require(p >= 1.0, ErrorCode::precondition, "weighted_lp_norm needs p >= 1");
  require_same_grid(f, w);
  const auto nodes = region_nodes(f.grid(), region);
  require(!nodes.empty(), ErrorCode::empty_region, "region holds no masked-in node");
  double top = 0.0;
  for (auto i : nodes) top = std::max(top, std::abs(f[i]));
  if (top == 0.0) return 0.0;
  double sum = 0.0;
  for (auto i : nodes) sum += std::pow(std::abs(f[i]) / top, p) * w[i];
  return top * std::pow(sum * f.grid().cell_volume(), 1.0 / p);
}

struct SobolevNorm {
  double lp = 0.0;
  double grad_lp = 0.0;
  double total = 0.0;
};

/// ||f||_{L^p(w)} + || |grad f| ||_{L^p(w)} with the difference gradient.
inline SobolevNorm sobolev_norm(const SampledField& f, const SampledField& w, double p) {
  SobolevNorm out;
  out.lp = weighted_lp_norm(f, w, p);
  out.grad_lp = weighted_lp_norm(gradient_magnitude(gradient_fd(f)), w, p);
  out.total = out.lp + out.grad_lp;
  return out;
}

/// phi(x) = exp(-1/(1-|x|^2)) / c_n on the unit ball, scaled as R^{-n} phi(x/R).
class Mollifier {
 public:
  Mollifier(int dim, double radius) : dim_(dim), radius_(radius) {
    require(dim >= 1 && dim <= max_dim, ErrorCode::precondition, "dimension must be 1, 2 or 3");
    require(radius > 0.0, ErrorCode::precondition, "mollifier radius must be positive");
    mass_ = profile_mass(dim);
  }

  static double profile(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

  /// Integral of the unnormalized profile over the unit ball (radial Simpson rule).
  static double profile_mass(int dim) {
    constexpr int m = 20000;
    const double dr = 1.0 / m;
    double s = 0.0;
    for (int k = 0; k <= m; ++k) {
      const double r = k * dr;
      const double v = std::pow(r, dim - 1) * profile(r * r);
      s += v * (k == 0 || k == m ? 1.0 : (k % 2 ? 4.0 : 2.0));
    }
    const double sphere = dim == 1 ? 2.0 : dim == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
    return sphere * s * dr / 3.0;
  }

  int dim() const { return dim_; }
  double radius() const { return radius_; }
  double continuous_mass() const { return mass_; }

  double operator()(const Point& x) const {
    const double r = norm(x, dim_) / radius_;
    const double r2 = r * r;
    return profile(r2) / (mass_ * std::pow(radius_, dim_));
  }

  /// sum over the lattice hZ^n of phi_R(kh) h^n.
  double lattice_mass(double h) const {
    const auto reach = static_cast<long>(std::ceil(radius_ / h));
    const long lo_y = dim_ > 1 ? -reach : 0, lo_z = dim_ > 2 ? -reach : 0;
    double s = 0.0;
    for (long a = -reach; a <= reach; ++a)
      for (long b = lo_y; b <= -lo_y; ++b)
        for (long c = lo_z; c <= -lo_z; ++c) s += (*this)(Point{a * h, b * h, c * h});
    return s * std::pow(h, dim_);
  }

 private:
  int dim_;
  double radius_;
  double mass_ = 1.0;
};

/// Nodes x with B(x, R) inside the domain.
inline std::vector<std::uint8_t> eroded_mask(const Grid& grid, double radius) {
  std::vector<std::uint8_t> mask(grid.size(), 0);
  parallel::parallel_for(grid.size(), [&](std::size_t idx) {
    if (grid.masked(idx) && ball_inside_domain(grid, Ball{grid.coord(idx), radius})) mask[idx] = 1;
  });
  return mask;
}

struct KernelTap {
  std::array<long, max_dim> offset;
  double weight;
};

/// Lattice offsets k with |k h| < R and weights phi_R(k h), rescaled to unit sum.
inline std::vector<KernelTap> mollifier_taps(const Grid& g, double radius) {
  const double h = g.spacing();
  const Mollifier phi(g.dim(), radius);
  std::vector<KernelTap> taps;
  const auto reach = static_cast<long>(std::ceil(radius / h));
  const long ry = g.dim() > 1 ? reach : 0, rz = g.dim() > 2 ? reach : 0;
  double total = 0.0;
  for (long a = -reach; a <= reach; ++a)
    for (long b = -ry; b <= ry; ++b)
      for (long c = -rz; c <= rz; ++c) {
        const Point x{a * h, b * h, c * h};
        if (norm(x, g.dim()) >= radius - g.geom_eps()) continue;
        const double v = phi(x);
        if (v <= 0.0) continue;
        taps.push_back({{a, b, c}, v});
        total += v;
      }
  for (auto& t : taps) t.weight /= total;
  return taps;
}

/// phi_R * f on the eroded domain. The discrete kernel is renormalized to
/// unit sum so constants are reproduced exactly.
inline SampledField mollify(const SampledField& f, double radius) {
  const Grid& g = f.grid();
  require(radius >= 2.0 * g.spacing() * (1.0 - 1e-12), ErrorCode::precondition, "mollifier radius must be >= 2h");
  auto mask = eroded_mask(g, radius);
  require(std::any_of(mask.begin(), mask.end(), [](auto m) { return m != 0; }), ErrorCode::eroded_empty,
          "no node keeps its mollifier ball inside the domain");
  const auto taps = mollifier_taps(g, radius);

  std::vector<double> out(g.size(), 0.0);
  parallel::parallel_for(g.size(), [&](std::size_t idx) {
    if (!mask[idx]) return;
    const auto k = g.multi_index(idx);
    double s = 0.0;
    for (const auto& t : taps) {
      MultiIndex j = k;
      for (int i = 0; i < max_dim; ++i) j[i] = static_cast<std::size_t>(static_cast<long>(k[i]) + t.offset[i]);
      s += t.weight * f[g.flat_index(j)];
    }
    out[idx] = s;
  });
  return {with_mask(g, std::move(mask)), std::move(out), FieldKind::function};
}

/// || |grad (phi_R * f)| ||_{L^p(Omega_0, w)} on the eroded domain Omega_0.
inline double mollified_gradient_norm(const SampledField& f, const SampledField& w, double p, double radius) {
  const auto m = mollify(f, radius);
  const auto grad = gradient_magnitude(gradient_fd(m));
  return weighted_lp_norm(grad, restrict_to(w, m.grid_ptr()), p);
}

struct MorreyOptions {
  std::vector<Ball> regions;      // B(x0, R)
  std::optional<double> q;        // unset: q = p / (1 + delta), delta the midpoint
  std::optional<double> rw;       // unset: estimated from the weight on the coarsest level
  std::size_t pair_budget = 20000;
  std::uint64_t seed = 0;
  double rw_threshold = 1e3;
  double rw_tol = 1e-3;
};

/// q = p / (1 + delta) with delta the midpoint of (n - 1, p / r_w - 1).
inline double morrey_exponent(int n, double p, double rw) {
  const double delta = 0.5 * ((n - 1.0) + (p / rw - 1.0));
  return p / (1.0 + delta);
}

/// max over node pairs (y, z) in B(x0, R) of
///   |f(z) - f(y)| / (|z - y|^{1 - nq/p} sigma(B_2R)^{(q-1)/p} ||grad f||_{L^p(B_R, w)}),
/// sigma = w^{1/(1-q)}.
inline double morrey_constant(const SampledField& f, const SampledField& w, double p, double q, const Ball& region,
                              std::size_t pair_budget = 20000, std::uint64_t seed = 0) {
  const Grid& g = f.grid();
  const int n = g.dim();
  require_same_grid(f, w);
  const auto inner = node_set(g, region);
  require(!inner.empty(), ErrorCode::empty_region, "Morrey ball holds no masked-in node");
  const Ball outer{region.center, 2.0 * region.radius};
  for (auto i : node_set(g, outer))
    require(w[i] > 0.0, ErrorCode::precondition, "weight must be positive on the Morrey region");

  if (oscillation_on(f, inner) == 0.0) return 0.0;
  const double grad = weighted_lp_norm(gradient_magnitude(gradient_fd(f)), w, p, region);
  require(grad > 0.0, ErrorCode::degenerate_gradient, "gradient vanishes on a ball where f is not constant");
  const double sigma = weighted_measure(dual_weight(w, q).sigma, outer);
  const double denom_const = std::pow(sigma, (q - 1.0) / p) * grad;
  const double expo = 1.0 - n * q / p;

  auto ratio = [&](std::size_t a, std::size_t b) {
    const double d = distance(g.coord(a), g.coord(b), n);
    return std::abs(f[a] - f[b]) / (std::pow(d, expo) * denom_const);
  };
  const std::size_t m = inner.size();
  double best = 0.0;
  if (m * (m - 1) / 2 <= pair_budget) {
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b) best = std::max(best, ratio(inner[a], inner[b]));
  } else {
    const CounterRng rng(seed, 0x6d6f72);
    for (std::size_t k = 0; k < pair_budget; ++k) {
      const auto a = rng.below(2 * k, m), b = rng.below(2 * k + 1, m);
      if (a != b) best = std::max(best, ratio(inner[a], inner[b]));
    }
  }
  return best;
}

struct MorreyResult {
  double q = 0.0;
  double rw = 0.0;
  std::vector<double> spacing;   // per refinement level
  std::vector<double> constant;  // max over regions, per level
  double max_ratio = 1.0;        // largest change factor between consecutive levels
  bool pass = false;
  std::vector<ReportRow> rows;
};

struct FieldPair {
  SampledField f;
  SampledField w;
};

/// Empirical Morrey constant on each refinement level; passes when every
/// level is finite and consecutive levels differ by less than a factor 2.
inline MorreyResult morrey_check(std::span<const FieldPair> levels, double p, const MorreyOptions& opts,
                                 const std::string& experiment = "morrey") {
  require(!levels.empty(), ErrorCode::precondition, "morrey_check needs at least one level");
  const int n = levels.front().f.grid().dim();
  MorreyResult res;
  if (opts.rw) {
    res.rw = *opts.rw;
  } else {
    const auto& w0 = levels.front().w;
    const auto est = estimate_rw(w0, default_cube_family(w0.grid()), opts.rw_threshold, opts.rw_tol);
    require(est.bounded, ErrorCode::precondition, "weight has no finite A_q class below the threshold");
    res.rw = est.value;
  }
  require(p > n * res.rw, ErrorCode::precondition, "Morrey check needs p > n r_w");
  res.q = opts.q ? *opts.q : morrey_exponent(n, p, res.rw);
  require(res.q > res.rw && res.q < p / n, ErrorCode::precondition, "q must lie in (r_w, p/n)");
  require(!opts.regions.empty(), ErrorCode::precondition, "no Morrey regions");

  for (const auto& lv : levels) {
    double c = 0.0;
    for (const auto& ball : opts.regions)
      c = std::max(c, morrey_constant(lv.f, lv.w, p, res.q, ball, opts.pair_budget, opts.seed));
    res.spacing.push_back(lv.f.grid().spacing());
    res.constant.push_back(c);
  }
  bool ok = true;
  for (std::size_t k = 0; k < res.constant.size(); ++k) {
    ok = ok && std::isfinite(res.constant[k]);
    if (k > 0) {
      const double a = res.constant[k - 1], b = res.constant[k];
      const double r = (a == 0.0 && b == 0.0) ? 1.0 : (a == 0.0 || b == 0.0) ? std::numeric_limits<double>::infinity()
                                                                               : std::max(a / b, b / a);
      res.max_ratio = std::max(res.max_ratio, r);
    }
  }
  res.pass = ok && res.max_ratio < 2.0;

  for (std::size_t k = 0; k < res.constant.size(); ++k)
    res.rows.push_back({experiment, "C_hat", params_string({{"p", p}, {"q", res.q}, {"h", res.spacing[k]}}),
                        res.constant[k], 0.0, Status::info, 0.0});
  res.rows.push_back({experiment, "refinement_ratio", params_string({{"p", p}, {"q", res.q}, {"rw", res.rw}}),
                      res.max_ratio, 2.0, res.pass ? Status::pass : Status::fail, 0.0});
  return res;
}

}  // namespace rbv
