#pragma once

// Variable-exponent Lebesgue and sequence norms, and the RBV^{p(.)} seminorm.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rbv/grid.hpp"
#include "rbv/packing.hpp"
#include "rbv/parallel.hpp"
#include "rbv/quadrature.hpp"
#include "rbv/report.hpp"
#include "rbv/rng.hpp"

namespace rbv {

class ExponentFunction {
 public:
  explicit ExponentFunction(SampledField values, std::optional<double> p_infinity = {})
      : values_(std::move(values)), p_infinity_(p_infinity) {
    const Grid& g = values_.grid();
    p_minus_ = std::numeric_limits<double>::infinity();
    p_plus_ = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g.masked(i)) continue;
      require(values_[i] >= 1.0, ErrorCode::bad_params, "exponent below 1 at node " + std::to_string(i));
      p_minus_ = std::min(p_minus_, values_[i]);
      p_plus_ = std::max(p_plus_, values_[i]);
    }
    if (p_infinity_) require(*p_infinity_ >= 1.0 && std::isfinite(*p_infinity_), ErrorCode::bad_params, "bad p_infinity");
  }

  static ExponentFunction constant(const GridPtr& grid, double p) {
    return ExponentFunction(SampledField(grid, std::vector<double>(grid->size(), p)));
  }

  const SampledField& field() const { return values_; }
  const Grid& grid() const { return values_.grid(); }
  const GridPtr& grid_ptr() const { return values_.grid_ptr(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double p_minus() const { return p_minus_; }
  double p_plus() const { return p_plus_; }
  std::optional<double> p_infinity() const { return p_infinity_; }
  bool is_constant() const { return p_minus_ == p_plus_; }

 private:
  SampledField values_;
  std::optional<double> p_infinity_;
  double p_minus_ = 1.0;
  double p_plus_ = 1.0;
};

struct LHDiagnostics {
  double c0_estimate = 0.0;
  double c_infinity_estimate = 0.0;
  double p_infinity_used = 0.0;
};

/// c0 = max over node pairs with 0 < |x-y| < 1/2 of |p(x)-p(y)| (-log|x-y|);
/// all pairs when they fit in the budget, otherwise `pair_budget` random ones.
/// c_inf = max |p(x) - p_inf| log(e + |x|).
inline LHDiagnostics lh_constants(const ExponentFunction& pfun, std::size_t pair_budget, std::uint64_t seed = 0) {
  require(pair_budget >= 1, ErrorCode::precondition, "pair_budget must be >= 1");
  const Grid& g = pfun.grid();
  const auto nodes = region_nodes(g, WholeDomain{});
  const int n = g.dim();
  LHDiagnostics d;

  auto pair_term = [&](std::size_t a, std::size_t b) {
    const double t = distance(g.coord(a), g.coord(b), n);
    if (t <= 0.0 || t >= 0.5) return 0.0;
    return std::abs(pfun[a] - pfun[b]) * -std::log(t);
  };
  const std::size_t m = nodes.size();
  if (m * (m - 1) / 2 <= pair_budget) {
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b) d.c0_estimate = std::max(d.c0_estimate, pair_term(nodes[a], nodes[b]));
  } else {
    const CounterRng rng(seed, 0x6c68);
    for (std::size_t k = 0; k < pair_budget; ++k)
      d.c0_estimate = std::max(d.c0_estimate, pair_term(nodes[rng.below(2 * k, m)], nodes[rng.below(2 * k + 1, m)]));
  }

  if (pfun.p_infinity()) {
    d.p_infinity_used = *pfun.p_infinity();
  } else {
    double far = -1.0;
    for (auto i : nodes) {
      const double r = norm(g.coord(i), n);
      if (r > far) {
        far = r;
        d.p_infinity_used = pfun[i];
      }
    }
  }
  for (auto i : nodes)
    d.c_infinity_estimate = std::max(d.c_infinity_estimate, std::abs(pfun[i] - d.p_infinity_used) *
                                                                std::log(std::numbers::e + norm(g.coord(i), n)));
  return d;
}

namespace detail {

inline void require_same_support(const Grid& a, const Grid& b) {
  require(same_geometry(a, b) && std::equal(a.mask().begin(), a.mask().end(), b.mask().begin()),
          ErrorCode::precondition, "function and exponent live on different grids");
}

/// inf { lambda > 0 : sum_i c (|v_i| / lambda)^{e_i} <= 1 }, by bisection to
/// relative tolerance `tol`. Values are normalized by max |v| first.
inline double luxemburg(std::span<const double> v, std::span<const double> e, double c, double tol) {
  require(tol > 0.0, ErrorCode::precondition, "tolerance must be positive");
  double top = 0.0, e_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    require(std::isfinite(v[i]), ErrorCode::precondition, "non-finite entry");
    top = std::max(top, std::abs(v[i]));
    e_min = std::min(e_min, e[i]);
  }
  if (top == 0.0) return 0.0;
  auto rho = [&](double lambda) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] != 0.0) s += c * std::pow(std::abs(v[i]) / top / lambda, e[i]);
    return s;
  };
  double hi = 2.0 * std::pow(std::max(1.0, rho(1.0)), 1.0 / e_min);
  double lo = 0.5 * hi;
  for (int k = 0; k < 2000 && rho(lo) <= 1.0 && lo > std::numeric_limits<double>::min(); ++k) {
    hi = lo;
    lo *= 0.5;
  }
  while (hi - lo > tol * hi) {
    const double mid = 0.5 * (lo + hi);
    if (rho(mid) <= 1.0) hi = mid;
    else lo = mid;
  }
  return top * hi;
}

}  // namespace detail

/// 1/p_E = <1/p>_E.
inline double harmonic_mean_exponent(const ExponentFunction& pfun, const Region& region) {
  const auto nodes = region_nodes(pfun.grid(), region);
  require(!nodes.empty(), ErrorCode::empty_region, "region holds no masked-in node");
  double s = 0.0;
  for (auto i : nodes) s += 1.0 / pfun[i];
  return static_cast<double>(nodes.size()) / s;
}

/// sum |f|^{p(x)} h^n; overflow comes back as +inf.
inline double modular(const SampledField& f, const ExponentFunction& pfun, const Region& region = WholeDomain{}) {
  detail::require_same_support(f.grid(), pfun.grid());
  const auto nodes = region_nodes(f.grid(), region);
  require(!nodes.empty(), ErrorCode::empty_region, "region holds no masked-in node");
  double s = 0.0;
  for (auto i : nodes) s += std::pow(std::abs(f[i]), pfun[i]);
  return s * f.grid().cell_volume();
}

inline double luxemburg_norm(const SampledField& f, const ExponentFunction& pfun,
                             const Region& region = WholeDomain{}, double tol = 1e-10) {
  detail::require_same_support(f.grid(), pfun.grid());
  const auto nodes = region_nodes(f.grid(), region);
  require(!nodes.empty(), ErrorCode::empty_region, "region holds no masked-in node");
  std::vector<double> v, e;
  v.reserve(nodes.size());
  e.reserve(nodes.size());
  for (auto i : nodes) {
    v.push_back(f[i]);
    e.push_back(pfun[i]);
  }
  return detail::luxemburg(v, e, f.grid().cell_volume(), tol);
}

/// ||chi_E||_{p(.)}.
inline double char_norm(const Region& region, const ExponentFunction& pfun, double tol = 1e-10) {
  const auto nodes = region_nodes(pfun.grid(), region);
  require(!nodes.empty(), ErrorCode::empty_region, "region holds no masked-in node");
  std::vector<double> v(nodes.size(), 1.0), e;
  e.reserve(nodes.size());
  for (auto i : nodes) e.push_back(pfun[i]);
  return detail::luxemburg(v, e, pfun.grid().cell_volume(), tol);
}

struct VariableSequence {
  std::vector<double> values;
  std::vector<double> exponents;
};

/// inf { lambda > 0 : sum_k (|t_k| / lambda)^{p_k} <= 1 }.
inline double seq_norm(const VariableSequence& s, double tol = 1e-10) {
  require(s.values.size() == s.exponents.size(), ErrorCode::precondition, "sequence length mismatch");
  for (double p : s.exponents) require(p >= 1.0, ErrorCode::precondition, "sequence exponent below 1");
  return detail::luxemburg(s.values, s.exponents, 1.0, tol);
}

/// G_D f = sum_k (osc_{B_k} f / r_k) chi_{B_k}.
inline SampledField g_operator(const SampledField& f, std::span<const Ball> collection) {
  const Grid& g = f.grid();
  require(pairwise_disjoint(collection, g.dim()), ErrorCode::precondition, "collection is not disjoint");
  std::vector<double> out(g.size(), 0.0);
  for (const auto& b : collection) {
    const auto nodes = node_set(g, b);
    require(!nodes.empty(), ErrorCode::empty_region, "ball holds no masked-in node");
    const double v = oscillation_on(f, nodes) / b.radius;
    for (auto i : nodes) out[i] = v;
  }
  return {f.grid_ptr(), std::move(out), FieldKind::function};
}

/// Entries t_k = (osc_{B_k} f / r_k) ||chi_{B_k}||_{p(.)} with exponents p_{B_k};
/// its sequence norm is the Luxemburg value of the packing.
inline VariableSequence rbv_sequence(const SampledField& f, std::span<const Ball> collection,
                                     const ExponentFunction& pfun, double tol = 1e-10) {
  detail::require_same_support(f.grid(), pfun.grid());
  require(pairwise_disjoint(collection, f.grid().dim()), ErrorCode::precondition, "collection is not disjoint");
  VariableSequence s;
  for (const auto& b : collection) {
    const auto nodes = node_set(f.grid(), b);
    require(!nodes.empty(), ErrorCode::empty_region, "ball holds no masked-in node");
    s.values.push_back(oscillation_on(f, nodes) / b.radius * char_norm(NodeList{nodes}, pfun, tol));
    s.exponents.push_back(harmonic_mean_exponent(pfun, NodeList{nodes}));
  }
  return s;
}

/// sum_k (osc_{B_k}(f/lambda) / r_k)^{p_{B_k}} ||chi_{B_k}||^{p_{B_k}}.
inline double rbv_var_modular(const SampledField& f, std::span<const Ball> collection, const ExponentFunction& pfun,
                              double lambda, double tol = 1e-10) {
  require(lambda > 0.0, ErrorCode::precondition, "lambda must be positive");
  const auto s = rbv_sequence(f, collection, pfun, tol);
  double total = 0.0;
  for (std::size_t k = 0; k < s.values.size(); ++k) total += std::pow(s.values[k] / lambda, s.exponents[k]);
  return total;
}

/// ||f||_{RBV_D^{p(.)}} for one fixed packing D.
inline double rbv_packing_norm(const SampledField& f, std::span<const Ball> collection, const ExponentFunction& pfun,
                               double tol = 1e-10) {
  return seq_norm(rbv_sequence(f, collection, pfun, tol), tol);
}

struct VarSeminorm {
  double value = 0.0;
  std::vector<Ball> collection;  // packing attaining the value
  std::size_t packings_explored = 0;
};

/// Lower bound of sup_D ||f||_{RBV_D^{p(.)}} over packings of the candidate set.
/// Proposals: the constant-exponent optimum at p_minus, and for a bisection
/// sequence of levels lambda the packing maximizing sum (t_k / lambda)^{p_k}.
/// Every proposal is evaluated exactly; the best is returned.
inline VarSeminorm rbv_var_seminorm(const SampledField& f, const ExponentFunction& pfun,
                                    const std::vector<double>& radii, PackingMethod method, double tol = 1e-10,
                                    std::size_t max_iters = 10000, int level_steps = 40) {
  const Grid& g = f.grid();
  detail::require_same_support(g, pfun.grid());
  require(method != PackingMethod::dp_1d_exact || g.dim() == 1, ErrorCode::precondition,
          "dp_1d_exact is only available in one dimension");
  const auto balls = candidate_balls(g, radii);

  struct Entry {
    double osc = 0.0, t = 0.0, p = 1.0;
  };
  const auto entries = parallel::parallel_map<Entry>(balls.size(), [&](std::size_t k) {
    const auto nodes = node_set(g, balls[k]);
    Entry e;
    e.osc = oscillation_on(f, nodes);
    if (e.osc > 0.0) {
      e.t = e.osc / balls[k].radius * char_norm(NodeList{nodes}, pfun, tol);
      e.p = harmonic_mean_exponent(pfun, NodeList{nodes});
    }
    return e;
  });

  VarSeminorm best;
  auto evaluate = [&](const PackingSolution& sol) {
    ++best.packings_explored;
    VariableSequence s;
    for (auto k : sol.chosen) {
      s.values.push_back(entries[k].t);
      s.exponents.push_back(entries[k].p);
    }
    const double v = seq_norm(s, tol);
    if (v > best.value) {
      best.value = v;
      best.collection = sol.collection;
    }
  };

  ScoredCandidates cands;
  cands.dim = g.dim();
  cands.p = pfun.p_minus();
  cands.items.resize(balls.size());
  const double hn = g.cell_volume();
  for (std::size_t k = 0; k < balls.size(); ++k) {
    cands.items[k].ball = balls[k];
    cands.items[k].oscillation = entries[k].osc;
    const double mass = static_cast<double>(node_set(g, balls[k]).size()) * hn;
    cands.items[k].weight_mass = mass;
    cands.items[k].score = entries[k].osc > 0.0 ? std::pow(entries[k].osc / balls[k].radius, cands.p) * mass : 0.0;
  }
  evaluate(pack(cands, method, max_iters));
  if (best.value == 0.0) return best;

  // Level proposals: Phi(lambda) = max_D sum_D (t_k/lambda)^{p_k} crosses 1 at the sup.
  auto at_level = [&](double lambda) {
    for (std::size_t k = 0; k < balls.size(); ++k)
      cands.items[k].score = entries[k].t > 0.0 ? std::pow(entries[k].t / lambda, entries[k].p) : 0.0;
    auto sol = pack(cands, method, max_iters);
    evaluate(sol);
    return sol.total;
  };
  double lo = best.value, hi = 2.0 * best.value;
  for (int k = 0; k < 60 && at_level(hi) > 1.0; ++k) {
    lo = hi;
    hi *= 2.0;
  }
  for (int k = 0; k < level_steps && hi - lo > 1e-9 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    if (at_level(mid) > 1.0) lo = mid;
    else hi = mid;
  }
  return best;
}

/// Passes when max/min over the values stays below `factor`.
inline bool refinement_stable(std::span<const double> values, double factor = 2.0) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double v : values) {
    if (!std::isfinite(v) || v <= 0.0) return false;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return values.empty() || hi / lo < factor;
}

struct GdEquivalence {
  std::vector<double> ratios;  // one per packing with a nonzero denominator
  std::size_t skipped = 0;
  double min_ratio = 0.0;
  double max_ratio = 0.0;
  bool pass = false;
  std::vector<ReportRow> rows;
};

/// r(D) = ||G_D f||_{p(.)} / ||f||_{RBV_D^{p(.)}} for each packing; passes when
/// every ratio lies in [1/c_eq, c_eq].
inline GdEquivalence gd_equivalence_check(const SampledField& f, const ExponentFunction& pfun,
                                          const std::vector<std::vector<Ball>>& packings, double c_eq = 4.0,
                                          double tol = 1e-10, const std::string& experiment = "gd_equivalence") {
  require(c_eq >= 1.0, ErrorCode::precondition, "c_eq must be >= 1");
  GdEquivalence res;
  const auto base = std::vector<std::pair<std::string, double>>{{"h", f.grid().spacing()}};
  for (std::size_t j = 0; j < packings.size(); ++j) {
    const double den = rbv_packing_norm(f, packings[j], pfun, tol);
    auto kv = base;
    kv.emplace_back("packing", static_cast<double>(j));
    kv.emplace_back("balls", static_cast<double>(packings[j].size()));
    if (den == 0.0) {
      ++res.skipped;
      res.rows.push_back({experiment, "ratio_skipped", params_string(kv), 0.0, 0.0, Status::info, 0.0});
      continue;
    }
    const double num = luxemburg_norm(g_operator(f, packings[j]), pfun, WholeDomain{}, tol);
    res.ratios.push_back(num / den);
    res.rows.push_back({experiment, "ratio", params_string(kv), num / den, 0.0, Status::info, 0.0});
  }
  if (!res.ratios.empty()) {
    res.min_ratio = *std::min_element(res.ratios.begin(), res.ratios.end());
    res.max_ratio = *std::max_element(res.ratios.begin(), res.ratios.end());
  }
  res.pass = res.ratios.empty() || (res.min_ratio >= 1.0 / c_eq && res.max_ratio <= c_eq);
  res.rows.push_back({experiment, "min_ratio", params_string(base), res.min_ratio, 1.0 / c_eq,
                      res.pass ? Status::pass : Status::fail, 0.0});
  res.rows.push_back({experiment, "max_ratio", params_string(base), res.max_ratio, c_eq,
                      res.pass ? Status::pass : Status::fail, 0.0});
  return res;
}

struct ExponentPair {
  SampledField f;
  ExponentFunction pfun;
};

struct SobolevEquivalence {
  std::vector<double> spacing;
  std::vector<double> seminorm;
  std::vector<double> gradient_norm;
  std::vector<double> ratios;  // NaN where both sides vanish
  bool pass = false;
  std::vector<ReportRow> rows;
};

/// rbv_var_seminorm(f) / || |grad f| ||_{p(.)} on each refinement level; passes
/// when every ratio lies in [1/c_thm, c_thm] and max/min over the levels stays
/// below stability_factor.
inline SobolevEquivalence varexp_sobolev_equivalence(std::span<const ExponentPair> levels,
                                                     const std::vector<double>& radii, PackingMethod method,
                                                     double c_thm = 16.0, double stability_factor = 2.0,
                                                     double tol = 1e-10, const std::string& experiment = "varexp_ratio") {
  require(!levels.empty(), ErrorCode::precondition, "no refinement levels");
  SobolevEquivalence res;
  std::vector<double> finite;
  bool in_band = true;
  for (const auto& lv : levels) {
    const int n = lv.f.grid().dim();
    require(lv.pfun.p_minus() > n, ErrorCode::precondition, "needs p_minus > n");
    const double h = lv.f.grid().spacing();
    const double semi = rbv_var_seminorm(lv.f, lv.pfun, radii, method, tol).value;
    const double grad = luxemburg_norm(gradient_magnitude(gradient_fd(lv.f)), lv.pfun, WholeDomain{}, tol);
    res.spacing.push_back(h);
    res.seminorm.push_back(semi);
    res.gradient_norm.push_back(grad);
    const auto kv = params_string({{"h", h}, {"p_minus", lv.pfun.p_minus()}, {"p_plus", lv.pfun.p_plus()}});
    res.rows.push_back({experiment, "rbv_var_seminorm", kv, semi, 0.0, Status::info, 0.0});
    res.rows.push_back({experiment, "gradient_luxemburg", kv, grad, 0.0, Status::info, 0.0});
    if (semi == 0.0 && grad == 0.0) {
      res.ratios.push_back(std::numeric_limits<double>::quiet_NaN());
      res.rows.push_back({experiment, "ratio_skipped", kv, 0.0, 0.0, Status::info, 0.0});
      continue;
    }
    const double r = grad > 0.0 ? semi / grad : std::numeric_limits<double>::infinity();
    res.ratios.push_back(r);
    finite.push_back(r);
    const bool ok = r >= 1.0 / c_thm && r <= c_thm;
    in_band = in_band && ok;
    res.rows.push_back({experiment, "ratio", kv, r, c_thm, ok ? Status::pass : Status::fail, 0.0});
  }
  const bool stable = refinement_stable(finite, stability_factor);
  res.pass = in_band && stable;
  double spread = 1.0;
  if (!finite.empty())
    spread = *std::max_element(finite.begin(), finite.end()) / *std::min_element(finite.begin(), finite.end());
  res.rows.push_back({experiment, "refinement_spread", params_string({{"levels", static_cast<double>(levels.size())}}),
                      spread, stability_factor, stable ? Status::pass : Status::fail, 0.0});
  return res;
}

}  // namespace rbv
