#pragma once

// Experiment dispatch. run_config turns a JSON configuration into a Report;
// rows appear in config order, and an experiment that raises a module error
// contributes a single "error" row with status fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rbv/harness/config.hpp"
#include "rbv/packing.hpp"
#include "rbv/quadrature.hpp"
#include "rbv/report.hpp"
#include "rbv/riesz.hpp"
#include "rbv/rng.hpp"
#include "rbv/sobolev.hpp"
#include "rbv/varexp.hpp"
#include "rbv/weights.hpp"

namespace rbv::harness {

using KV = std::vector<std::pair<std::string, double>>;

struct RunContext {
  std::uint64_t seed = 0;
  std::string id;
  std::vector<ReportRow> rows;

  void add(const std::string& quantity, const KV& kv, double value, double tolerance = 0.0,
           Status status = Status::info, const std::vector<std::pair<std::string, std::string>>& text = {}) {
    rows.push_back({id, quantity, params_string(kv, text), value, tolerance, status, 0.0});
  }
  void check(const std::string& quantity, const KV& kv, double value, double tolerance, bool ok) {
    add(quantity, kv, value, tolerance, ok ? Status::pass : Status::fail);
  }
};

namespace detail {

inline int parse_levels(const Node& e) {
  const int levels = e.integer_or("levels", 1);
  if (levels < 1 || levels > 12) e.at("levels").fail("levels must be in 1..12");
  return levels;
}

inline PackingMethod parse_method(const Node& e, int dim) {
  if (!e.has("method")) return dim == 1 ? PackingMethod::dp_1d_exact : PackingMethod::greedy_plus_local_search;
  try {
    return parse_packing_method(e.string("method"));
  } catch (const Error&) {
    e.at("method").fail("method must be dp_1d_exact, greedy or greedy_plus_local_search");
  }
}

inline double parse_p(const Node& e, const std::string& key = "p", double def = 2.0) {
  const double p = e.number_or(key, def);
  if (!(p >= 1.0)) e.at(key).fail("p must be >= 1");
  return p;
}

inline std::vector<double> parse_ps(const Node& e, std::vector<double> def) {
  auto ps = e.numbers_or("ps", std::move(def));
  if (e.has("p") && !e.has("ps")) ps = {parse_p(e)};
  for (double p : ps)
    if (!(p >= 1.0)) e.at("ps").fail("every p must be >= 1");
  return ps;
}

inline FieldSpec weight_spec(const Node& e) {
  if (!e.has("weight")) return FieldSpec{"constant_weight", {}, {}};
  return parse_field(e.at("weight"), FieldKind::weight);
}

/// |a - b| <= rel * |b|.
inline bool close_rel(double a, double b, double rel) { return std::abs(a - b) <= rel * std::abs(b); }

/// Largest relative change between consecutive entries.
inline double max_drift(const std::vector<double>& v) {
  double d = 0.0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    const double a = v[k - 1], b = v[k];
    if (a == b) continue;
    d = std::max(d, std::abs(b - a) / std::max(std::abs(a), std::abs(b)));
  }
  return d;
}

/// max/min over consecutive levels; 1 when all equal, inf when one side is 0.
inline double max_factor(const std::vector<double>& v) {
  double f = 1.0;
  for (std::size_t k = 1; k < v.size(); ++k) {
    const double a = v[k - 1], b = v[k];
    if (a == b) continue;
    if (a == 0.0 || b == 0.0) return std::numeric_limits<double>::infinity();
    f = std::max(f, std::max(a / b, b / a));
  }
  return f;
}

/// Optional {"expected": x, "rel_tol": r} check on a final value.
inline void expected_check(RunContext& ctx, const Node& e, const std::string& quantity, const KV& kv, double value,
                           double default_tol) {
  if (!e.has("expected")) return;
  const double expected = e.number("expected");
  const double tol = e.number_or("rel_tol", default_tol);
  KV k = kv;
  k.emplace_back("expected", expected);
  ctx.check(quantity + "_vs_expected", k, value, tol, close_rel(value, expected, tol));
}

inline void monotone_row(RunContext& ctx, const std::string& quantity, const std::vector<double>& values) {
  if (values.size() < 2) return;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < values.size(); ++k) worst = std::min(worst, values[k] - values[k - 1]);
  ctx.add(quantity + "_refinement_min_increment", {{"levels", static_cast<double>(values.size())}}, worst, 1e-8,
          Status::info, {{"nondecreasing", worst >= -1e-8 ? "yes" : "no"}});
}

inline double estimate_rw_default(const SampledField& w, double threshold) {
  const auto est = estimate_rw(w, default_cube_family(w.grid()), threshold, 1e-3);
  return est.bounded ? est.value : std::numeric_limits<double>::infinity();
}

}  // namespace detail

// ---------------------------------------------------------------- riesz_variation

inline void run_riesz_variation(const Node& e, RunContext& ctx) {
  const auto gs = parse_grid(e.at("grid"));
  const auto fs = parse_field(e.at("function"), FieldKind::function);
  const auto ws = detail::weight_spec(e);
  const double p = detail::parse_p(e);
  const auto radii = parse_radii(e.at("radii"));
  const auto method = detail::parse_method(e, gs.dim);
  const auto max_iters = static_cast<std::size_t>(e.integer_or("max_iters", 10000));
  const int levels = detail::parse_levels(e);
  std::vector<double> values;
  for (int lv = 0; lv < levels; ++lv) {
    const auto g = make_grid(gs, lv);
    const auto f = make_field(fs, g, FieldKind::function);
    const auto w = make_field(ws, g, FieldKind::weight);
    const auto sol = riesz_variation(f, w, p, radii_for(radii, *g), method, max_iters);
    const KV kv{{"p", p}, {"h", g->spacing()}};
    ctx.add("variation", kv, sol.variation, 0.0, Status::info, {{"method", to_string(method)}});
    ctx.add("total", kv, sol.total);
    ctx.add("n_balls", kv, static_cast<double>(sol.collection.size()));
    values.push_back(sol.variation);
  }
  detail::monotone_row(ctx, "variation", values);
  detail::expected_check(ctx, e, "variation", {{"p", p}}, values.back(), 0.05);
}

// ---------------------------------------------------------------- sobolev

inline void run_sobolev(const Node& e, RunContext& ctx) {
  const auto gs = parse_grid(e.at("grid"));
  const auto fs = parse_field(e.at("function"), FieldKind::function);
  const auto ws = detail::weight_spec(e);
  const double p = detail::parse_p(e);
  const int levels = detail::parse_levels(e);
  double last = 0.0;
  for (int lv = 0; lv < levels; ++lv) {
    const auto g = make_grid(gs, lv);
    const auto n = sobolev_norm(make_field(fs, g, FieldKind::function), make_field(ws, g, FieldKind::weight), p);
    const KV kv{{"p", p}, {"h", g->spacing()}};
    ctx.add("lp", kv, n.lp);
    ctx.add("grad_lp", kv, n.grad_lp);
    ctx.add("total", kv, n.total);
    last = n.total;
  }
  detail::expected_check(ctx, e, "total", {{"p", p}}, last, 0.02);
}

// ---------------------------------------------------------------- weights

struct WeightsSetup {
  GridSpec grid;
  FieldSpec weight;
  std::vector<double> ps, ss, doubling_radii;
  std::optional<double> min_side;
  int family_levels = 0;  // 0: default family
  int shifts = 2;
  double rw_threshold = 1e3;
};

inline WeightsSetup parse_weights(const Node& e) {
  WeightsSetup s;
  s.grid = parse_grid(e.at("grid"));
  s.weight = detail::weight_spec(e);
  s.ps = e.numbers_or("ps", {2.0});
  for (double p : s.ps)
    if (!(p > 1.0)) e.at("ps").fail("A_p needs p > 1");
  s.ss = e.numbers_or("ss", {2.0});
  for (double x : s.ss)
    if (!(x > 1.0)) e.at("ss").fail("RH_s needs s > 1");
  s.doubling_radii = e.numbers_or("doubling_radii", {});
  if (e.has("family")) {
    const auto fam = e.at("family");
    s.min_side = fam.number("min_side");
    s.family_levels = fam.integer("levels");
    s.shifts = fam.integer_or("shifts", 1);
    if (s.family_levels < 1 || s.shifts < 1) fam.fail("levels and shifts must be >= 1");
  }
  s.rw_threshold = threshold_at_least_one(e, "rw_threshold", 1e3);
  return s;
}

inline CubeFamily make_family(const WeightsSetup& s, const Grid& g) {
  if (s.min_side) return generate_cubes(g, *s.min_side, s.family_levels, s.shifts);
  return default_cube_family(g, s.shifts);
}

inline WeightDiagnostics weights_diagnostics(const WeightsSetup& s, const GridPtr& g, CubeFamily& family) {
  const auto w = make_field(s.weight, g, FieldKind::weight);
  family = make_family(s, *g);
  std::vector<Ball> balls;
  if (!s.doubling_radii.empty()) balls = candidate_balls(*g, radii_for(s.doubling_radii, *g));
  return diagnose_weight(w, family, s.ps, s.ss, balls, s.rw_threshold);
}

inline void run_weights(const Node& e, RunContext& ctx) {
  const auto s = parse_weights(e);
  const int levels = detail::parse_levels(e);
  const double ap_max = e.number_or("ap_max", std::numeric_limits<double>::quiet_NaN());
  const double ap_min = e.number_or("ap_min", std::numeric_limits<double>::quiet_NaN());
  for (int lv = 0; lv < levels; ++lv) {
    const auto g = make_grid(s.grid, lv);
    CubeFamily family;
    const auto d = weights_diagnostics(s, g, family);
    const std::vector<std::pair<std::string, std::string>> fam{{"family", to_string(family.provenance)}};
    const double h = g->spacing();
    for (const auto& [p, v] : d.ap_constant) {
      const KV kv{{"p", p}, {"h", h}, {"cubes", static_cast<double>(family.cubes.size())}};
      if (!std::isnan(ap_max)) ctx.check("ap_constant_below", kv, v, ap_max, v <= ap_max);
      else if (!std::isnan(ap_min)) ctx.check("ap_constant_above", kv, v, ap_min, v >= ap_min);
      else ctx.add("ap_constant", kv, v, 0.0, Status::info, fam);
    }
    ctx.add("a1_constant", {{"h", h}}, d.a1_constant, 0.0, Status::info, fam);
    for (const auto& [x, v] : d.rh_constant) ctx.add("rh_constant", {{"s", x}, {"h", h}}, v, 0.0, Status::info, fam);
    if (!s.doubling_radii.empty()) ctx.add("doubling_constant", {{"h", h}}, d.doubling_constant);
    ctx.add("rw_estimate", {{"h", h}, {"threshold", s.rw_threshold}}, d.rw_estimate.value, 0.0, Status::info,
            {{"bounded", d.rw_estimate.bounded ? "yes" : "no"}});
  }
}

// ---------------------------------------------------------------- varexp

inline void run_varexp(const Node& e, RunContext& ctx) {
  const auto gs = parse_grid(e.at("grid"));
  const auto fs = parse_field(e.at("function"), FieldKind::function);
  const auto es = parse_exponent(e.at("exponent"));
  const auto radii = parse_radii(e.at("radii"));
  const auto method = detail::parse_method(e, gs.dim);
  const auto budget = static_cast<std::size_t>(e.integer_or("pair_budget", 200000));
  const double tol = e.number_or("tol", 1e-10);
  const int levels = detail::parse_levels(e);
  std::vector<double> semis;
  for (int lv = 0; lv < levels; ++lv) {
    const auto g = make_grid(gs, lv);
    const auto f = make_field(fs, g, FieldKind::function);
    const auto pf = make_exponent(es, g);
    const KV kv{{"h", g->spacing()}};
    const auto lh = lh_constants(pf, budget, ctx.seed);
    ctx.add("p_minus", kv, pf.p_minus());
    ctx.add("p_plus", kv, pf.p_plus());
    ctx.add("lh_c0", kv, lh.c0_estimate);
    ctx.add("lh_c_infinity", kv, lh.c_infinity_estimate, 0.0, Status::info);
    ctx.add("p_infinity_used", kv, lh.p_infinity_used);
    ctx.add("harmonic_mean", kv, harmonic_mean_exponent(pf, WholeDomain{}));
    ctx.add("modular", kv, modular(f, pf));
    ctx.add("luxemburg_norm", kv, luxemburg_norm(f, pf, WholeDomain{}, tol));
    const auto sv = rbv_var_seminorm(f, pf, radii_for(radii, *g), method, tol);
    ctx.add("rbv_var_seminorm", kv, sv.value, 0.0, Status::info, {{"method", to_string(method)}});
    semis.push_back(sv.value);
  }
  detail::monotone_row(ctx, "rbv_var_seminorm", semis);
}

// ---------------------------------------------------------------- variation_vs_gradient

/// Two-sided comparison of the Riesz variation with the weighted gradient norm
/// over a (p, level) matrix.
inline void verify_theorem1(const Node& e, RunContext& ctx) {
  const auto gs = parse_grid(e.at("grid"));
  const auto fs = parse_field(e.at("function"), FieldKind::function);
  const auto ws = detail::weight_spec(e);
  const auto ps = detail::parse_ps(e, {2.0});
  const auto radii = parse_radii(e.at("radii"));
  const auto method = detail::parse_method(e, gs.dim);
  const int levels = detail::parse_levels(e);
  const std::string suite = e.string_or("suite", "two_sided");
  if (suite != "two_sided" && suite != "left_only") e.at("suite").fail("suite must be two_sided or left_only");
  const double bound = threshold_at_least_one(e, "ratio_bound", 16.0);
  const double stab = threshold_at_least_one(e, "stability_factor", 2.0);

  std::optional<double> rw;
  if (suite == "two_sided") {
    rw = e.has("rw") ? e.number("rw")
                     : detail::estimate_rw_default(make_field(ws, make_grid(gs, 0), FieldKind::weight),
                                                   e.number_or("rw_threshold", 1e3));
    ctx.add("rw_estimate", {}, *rw);
  }

  for (double p : ps) {
    if (rw) require(p > gs.dim * *rw, ErrorCode::precondition, "two-sided suite needs p > n r_w");
    std::vector<double> vr, gr;
    bool bounded = true, any = false;
    for (int lv = 0; lv < levels; ++lv) {
      const auto g = make_grid(gs, lv);
      const auto f = make_field(fs, g, FieldKind::function);
      const auto w = make_field(ws, g, FieldKind::weight);
      const double v = riesz_variation(f, w, p, radii_for(radii, *g), method).variation;
      const double grad = weighted_lp_norm(gradient_magnitude(gradient_fd(f)), w, p);
      const KV kv{{"p", p}, {"h", g->spacing()}};
      ctx.add("variation", kv, v);
      ctx.add("grad_norm", kv, grad);
      if (v == 0.0 && grad == 0.0) {
        ctx.add("both_zero", kv, 0.0);
        continue;
      }
      any = true;
      const double grad_over_v = v > 0.0 ? grad / v : std::numeric_limits<double>::infinity();
      const double v_over_grad = grad > 0.0 ? v / grad : std::numeric_limits<double>::infinity();
      ctx.add("grad_over_variation", kv, grad_over_v);
      bounded = bounded && grad_over_v <= bound;
      gr.push_back(grad_over_v);
      if (suite == "two_sided") {
        ctx.add("variation_over_grad", kv, v_over_grad);
        bounded = bounded && v_over_grad <= bound;
        vr.push_back(v_over_grad);
      }
    }
    if (!any) continue;
    ctx.check("ratios_bounded", {{"p", p}}, std::max(gr.empty() ? 0.0 : *std::max_element(gr.begin(), gr.end()),
                                                      vr.empty() ? 0.0 : *std::max_element(vr.begin(), vr.end())),
              bound, bounded);
    const double factor = std::max(detail::max_factor(gr), detail::max_factor(vr));
    ctx.check("ratios_stable", {{"p", p}}, factor, stab, factor < stab);
    if (e.has("expected_ratio") && !vr.empty()) {
      const double expected = e.number("expected_ratio");
      const double tol = e.number_or("rel_tol", 0.05);
      ctx.check("variation_over_grad_vs_expected", {{"p", p}, {"expected", expected}}, vr.back(), tol,
                detail::close_rel(vr.back(), expected, tol));
    }
  }
}

// ---------------------------------------------------------------- weak_type

inline void run_weak_type(const Node& e, RunContext& ctx) {
  const auto gs = parse_grid(e.at("grid"));
  const auto fs = parse_field(e.at("function"), FieldKind::function);
  const auto ws = detail::weight_spec(e);
  const auto ps = detail::parse_ps(e, {1.0, 2.0});
  const auto radii = parse_radii(e.at("radii"));
  WeakTypeOptions opts;
  opts.method = detail::parse_method(e, gs.dim);
  opts.t_grid = e.numbers_or("t_grid", {});
  const double k_bound = e.number_or("k_bound", std::numeric_limits<double>::quiet_NaN());
  const auto g = make_grid(gs, 0);
  const auto f = make_field(fs, g, FieldKind::function);
  const auto w = make_field(ws, g, FieldKind::weight);
  opts.radii = radii_for(radii, *g);
  opts.shell_radius = e.number_or("shell_radius", 3.0 * g->spacing());
  for (double p : ps) {
    opts.k_max = e.number_or("K_max", 32.0 * std::pow(2.0, p));
    auto res = weak_type_check(f, w, p, opts, ctx.id);
    for (auto& r : res.rows) ctx.rows.push_back(std::move(r));
    if (!std::isnan(k_bound))
      ctx.check("max_K_below_bound", {{"p", p}}, res.max_k, k_bound, res.max_k <= k_bound);
  }
}

// ---------------------------------------------------------------- ap_subset

inline void run_ap_subset(const Node& e, RunContext& ctx) {
  const auto gs = parse_grid(e.at("grid"));
  const double p = detail::parse_p(e);
  if (!(p > 1.0)) e.at("p").fail("A_p needs p > 1");
  const int trials = e.integer_or("trials", 200);
  if (trials < 1) e.at("trials").fail("trials must be >= 1");
  std::vector<FieldSpec> weights;
  const auto wn = e.at("weights");
  for (std::size_t i = 0; i < wn.size(); ++i) weights.push_back(parse_field(wn[i], FieldKind::weight));
  WeightsSetup fam_setup;
  if (e.has("family")) {
    const auto fam = e.at("family");
    fam_setup.min_side = fam.number("min_side");
    fam_setup.family_levels = fam.integer("levels");
    fam_setup.shifts = fam.integer_or("shifts", 1);
  }
  const auto g = make_grid(gs, 0);
  const auto family = make_family(fam_setup, *g);

  for (std::size_t wi = 0; wi < weights.size(); ++wi) {
    const auto w = make_field(weights[wi], g, FieldKind::weight);
    const double ap = ap_constant(w, p, family);
    const CounterRng rng(ctx.seed, 0x4c3231 + wi);
    std::uint64_t counter = 0;
    int violations = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    for (int t = 0; t < trials; ++t) {
      const auto& cube = family.cubes[rng.below(counter++, family.cubes.size())];
      const auto q = cube_nodes(*g, cube);
      const double keep = rng.uniform(counter++);
      double e_count = 0.0, w_e = 0.0, w_q = 0.0;
      for (std::size_t k = 0; k < q.size(); ++k) {
        w_q += w[q[k]];
        if (rng.uniform(counter++) < keep) {
          e_count += 1.0;
          w_e += w[q[k]];
        }
      }
      if (e_count == 0.0) {  // E must be nonempty: keep the first node
        e_count = 1.0;
        w_e = w[q[0]];
      }
      const double lhs = std::pow(e_count / static_cast<double>(q.size()), p);
      const double rhs = (ap + 1e-6) * w_e / w_q;
      if (!(lhs <= rhs)) ++violations;
      if (std::isfinite(rhs)) min_margin = std::min(min_margin, rhs - lhs);
    }
    const KV kv{{"p", p}, {"weight", static_cast<double>(wi)}, {"trials", static_cast<double>(trials)}};
    const std::vector<std::pair<std::string, std::string>> name{
        {"family", weights[wi].catalog.empty() ? weights[wi].file : weights[wi].catalog}};
    ctx.add("ap_constant", kv, ap, 0.0, Status::info, name);
    ctx.add("min_margin", kv, min_margin, 0.0, Status::info, name);
    ctx.check("violations", kv, violations, 0.0, violations == 0);
  }
}

// ---------------------------------------------------------------- classical_riesz

inline void run_classical_riesz(const Node& e, RunContext& ctx) {
  const auto gs = parse_grid(e.at("grid"));
  if (gs.dim != 1) e.at("grid").at("dim").fail("classical_riesz needs dim = 1");
  const auto fs = parse_field(e.at("function"), FieldKind::function);
  const double p = detail::parse_p(e);
  const double tol = e.number_or("rel_tol", 0.01);
  const auto g = make_grid(gs, 0);
  const auto f = make_field(fs, g, FieldKind::function);
  const auto part = finest_partition(*g);
  const double v = classical_riesz_1d(f, p, part);
  const auto grad = gradient_magnitude(gradient_fd(f));
  std::vector<double> gp(g->size());
  for (std::size_t i = 0; i < gp.size(); ++i) gp[i] = std::pow(grad[i], p);
  const double quad = riemann_integral(grad.with_values(std::move(gp)), WholeDomain{});
  const KV kv{{"p", p}, {"h", g->spacing()}};
  ctx.add("classical_riesz", kv, v);
  ctx.add("gradient_quadrature", kv, quad);
  ctx.check("classical_vs_quadrature", kv, quad == 0.0 ? v : std::abs(v - quad) / quad, tol,
            detail::close_rel(v, quad, tol));
  detail::expected_check(ctx, e, "classical_riesz", kv, v, tol);
}

// ---------------------------------------------------------------- morrey

inline void run_morrey(const Node& e, RunContext& ctx) {
  const auto gs = parse_grid(e.at("grid"));
  const auto fs = parse_field(e.at("function"), FieldKind::function);
  const auto ws = detail::weight_spec(e);
  const double p = detail::parse_p(e);
  const int levels = detail::parse_levels(e);
  MorreyOptions opts;
  opts.regions = parse_balls(e.at("regions"), gs.dim);
  if (e.has("q")) opts.q = e.number("q");
  if (e.has("rw")) opts.rw = e.number("rw");
  opts.pair_budget = static_cast<std::size_t>(e.integer_or("pair_budget", 20000));
  opts.seed = ctx.seed;
  opts.rw_threshold = threshold_at_least_one(e, "rw_threshold", 1e3);
  std::vector<FieldPair> lv;
  for (int k = 0; k < levels; ++k) {
    const auto g = make_grid(gs, k);
    lv.push_back({make_field(fs, g, FieldKind::function), make_field(ws, g, FieldKind::weight)});
  }
  auto res = morrey_check(lv, p, opts, ctx.id);
  for (auto& r : res.rows) ctx.rows.push_back(std::move(r));
}

// ---------------------------------------------------------------- gd_equivalence

inline void run_gd_equivalence(const Node& e, RunContext& ctx) {
  const auto gs = parse_grid(e.at("grid"));
  const auto fs = parse_field(e.at("function"), FieldKind::function);
  const auto es = parse_exponent(e.at("exponent"));
  const double c_eq = threshold_at_least_one(e, "C_eq", 4.0);
  const double drift = e.number_or("drift", 0.1);
  const int levels = detail::parse_levels(e);
  std::vector<std::vector<Ball>> fixed;
  if (e.has("packings")) {
    const auto pk = e.at("packings");
    for (std::size_t i = 0; i < pk.size(); ++i) fixed.push_back(parse_balls(pk[i], gs.dim));
  }
  const bool auto_packing = e.boolean_or("auto_packing", true);
  std::vector<double> radii;
  if (auto_packing) radii = parse_radii(e.at("radii"));
  const auto method = detail::parse_method(e, gs.dim);

  std::vector<double> mins, maxs;
  bool all_pass = true;
  for (int lv = 0; lv < levels; ++lv) {
    const auto g = make_grid(gs, lv);
    const auto f = make_field(fs, g, FieldKind::function);
    const auto pf = make_exponent(es, g);
    auto packings = fixed;
    if (auto_packing) {
      const auto ones = sample_catalog(g, "constant_weight", {});
      packings.push_back(riesz_variation(f, ones, pf.p_minus(), radii_for(radii, *g), method).collection);
    }
    auto res = gd_equivalence_check(f, pf, packings, c_eq, 1e-10, ctx.id);
    for (auto& r : res.rows) ctx.rows.push_back(std::move(r));
    all_pass = all_pass && res.pass;
    if (!res.ratios.empty()) {
      mins.push_back(res.min_ratio);
      maxs.push_back(res.max_ratio);
    }
  }
  const double d = std::max(detail::max_drift(mins), detail::max_drift(maxs));
  ctx.check("ratio_drift", {{"levels", static_cast<double>(levels)}}, d, drift, d <= drift);
  (void)all_pass;
}

// ---------------------------------------------------------------- varexp_ratio

inline void run_varexp_ratio(const Node& e, RunContext& ctx) {
  const auto gs = parse_grid(e.at("grid"));
  const auto fs = parse_field(e.at("function"), FieldKind::function);
  const auto es = parse_exponent(e.at("exponent"));
  const auto radii = parse_radii(e.at("radii"));
  const auto method = detail::parse_method(e, gs.dim);
  const double c_thm = threshold_at_least_one(e, "C_thm", 16.0);
  const double drift = e.number_or("drift", 0.1);
  const int levels = detail::parse_levels(e);
  std::vector<ExponentPair> lv;
  std::vector<double> use_radii;
  for (int k = 0; k < levels; ++k) {
    const auto g = make_grid(gs, k);
    lv.push_back({make_field(fs, g, FieldKind::function), make_exponent(es, g)});
  }
  // Same radii on every level so the drift reflects the grid, not the candidate set.
  use_radii = radii_for(radii, lv.front().f.grid());
  auto res = varexp_sobolev_equivalence(lv, use_radii, method, c_thm, 1.0 / (1.0 - drift), 1e-10, ctx.id);
  for (auto& r : res.rows) ctx.rows.push_back(std::move(r));
  if (e.has("expected_ratio") && !res.ratios.empty() && !std::isnan(res.ratios.back())) {
    const double expected = e.number("expected_ratio");
    const double tol = e.number_or("rel_tol", 0.1);
    ctx.check("ratio_vs_expected", {{"expected", expected}}, res.ratios.back(), tol,
              detail::close_rel(res.ratios.back(), expected, tol));
  }
}

// ---------------------------------------------------------------- optimizer_soundness

namespace detail {

/// Random 1D candidate set: centers and radii on a 1/64 lattice, uniform scores.
inline ScoredCandidates random_candidates(const CounterRng& rng, std::uint64_t& counter, std::size_t max_size) {
  ScoredCandidates c;
  c.dim = 1;
  c.p = 2.0;
  const std::size_t n = 1 + rng.below(counter++, max_size);
  for (std::size_t i = 0; i < n; ++i) {
    BallScore b;
    b.ball.center = {static_cast<double>(rng.below(counter++, 65)) / 64.0, 0.0, 0.0};
    b.ball.radius = static_cast<double>(1 + rng.below(counter++, 12)) / 64.0;
    b.score = rng.uniform(counter++);
    c.items.push_back(b);
  }
  return c;
}

/// Exhaustive optimum over all disjoint subsets (n <= 20).
inline double brute_force_optimum(const ScoredCandidates& c) {
  const std::size_t n = c.items.size();
  require(n <= 20, ErrorCode::precondition, "brute force is limited to 20 candidates");
  double best = 0.0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double total = 0.0;
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      if (!(mask >> i & 1u)) continue;
      for (std::size_t j = i + 1; j < n && ok; ++j)
        if ((mask >> j & 1u) && !balls_disjoint(c.items[i].ball, c.items[j].ball, 1)) ok = false;
      total += c.items[i].score;
    }
    if (ok) best = std::max(best, total);
  }
  return best;
}

}  // namespace detail

inline void run_optimizer_soundness(const Node& e, RunContext& ctx) {
  const int sets = e.integer_or("sets", 50);
  const int max_size = e.integer_or("max_size", 15);
  if (sets < 1) e.at("sets").fail("sets must be >= 1");
  if (max_size < 1 || max_size > 20) e.at("max_size").fail("max_size must be in 1..20");
  const CounterRng rng(ctx.seed, 0x6f7074);
  std::uint64_t counter = 0;
  int mismatches = 0;
  double greedy_min = 1.0, ls_min = 1.0;
  for (int s = 0; s < sets; ++s) {
    const auto c = detail::random_candidates(rng, counter, static_cast<std::size_t>(max_size));
    const double opt = detail::brute_force_optimum(c);
    const auto dp = pack_1d_exact(c);
    const auto gr = pack_greedy(c);
    const auto ls = pack_local_search(gr, c, 10000);
    if (std::abs(dp.total - opt) > 1e-12 * std::max(1.0, opt)) ++mismatches;
    if (opt > 0.0) {
      greedy_min = std::min(greedy_min, gr.total / opt);
      ls_min = std::min(ls_min, ls.total / opt);
    }
  }
  const KV kv{{"sets", static_cast<double>(sets)}, {"max_size", static_cast<double>(max_size)}};
  const double g_bound = e.number_or("greedy_bound", 0.6), ls_bound = e.number_or("local_search_bound", 0.95);
  ctx.check("dp_bruteforce_mismatches", kv, mismatches, 0.0, mismatches == 0);
  ctx.check("greedy_min_ratio", kv, greedy_min, g_bound, greedy_min >= g_bound);
  ctx.check("local_search_min_ratio", kv, ls_min, ls_bound, ls_min >= ls_bound);
}

// ---------------------------------------------------------------- dispatch

using Runner = std::function<void(const Node&, RunContext&)>;

inline const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> table = {
      {"riesz_variation", run_riesz_variation},
      {"sobolev", run_sobolev},
      {"weights", run_weights},
      {"varexp", run_varexp},
      {"variation_vs_gradient", verify_theorem1},
      {"weak_type", run_weak_type},
      {"ap_subset", run_ap_subset},
      {"classical_riesz", run_classical_riesz},
      {"morrey", run_morrey},
      {"gd_equivalence", run_gd_equivalence},
      {"varexp_ratio", run_varexp_ratio},
      {"optimizer_soundness", run_optimizer_soundness},
  };
  return table;
}

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
};

inline std::uint64_t config_seed(const Node& root) {
  if (!root.has("seed")) return 0;
  const double s = root.number("seed");
  if (s < 0 || s != std::floor(s) || s > 9.007199254740992e15) root.at("seed").fail("seed must be a nonnegative integer");
  return static_cast<std::uint64_t>(s);
}

inline Report run_config(const json& cfg, const RunOptions& opts = {}) {
  const Node root(cfg, "");
  if (!cfg.is_object()) root.fail("config must be a JSON object");
  const std::uint64_t seed = opts.seed ? *opts.seed : config_seed(root);
  const bool timing = root.boolean_or("record_timing", false);
  const auto exps = root.at("experiments");

  json effective = cfg;
  effective["seed"] = seed;
  Report report;
  report.metadata = {version, config_hash(effective), seed};

  // Validate the experiment list before running anything.
  std::vector<std::pair<std::string, const Runner*>> plan;
  for (std::size_t i = 0; i < exps.size(); ++i) {
    const auto e = exps[i];
    const auto type = e.string("type");
    auto it = runners().find(type);
    if (it == runners().end()) e.at("type").fail("unknown experiment type '" + type + "'");
    plan.emplace_back(e.string_or("id", type + "_" + std::to_string(i)), &it->second);
  }

  for (std::size_t i = 0; i < exps.size(); ++i) {
    RunContext ctx{seed, plan[i].first, {}};
    const auto t0 = std::chrono::steady_clock::now();
    try {
      (*plan[i].second)(exps[i], ctx);
    } catch (const Error& err) {
      if (err.code() == ErrorCode::config_error) throw;
      ctx.rows.push_back({ctx.id, "error", err.what(), 0.0, 0.0, Status::fail, 0.0});
    } catch (const std::exception& err) {
      ctx.rows.push_back({ctx.id, "error", err.what(), 0.0, 0.0, Status::fail, 0.0});
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    for (auto& r : ctx.rows) {
      if (timing) r.runtime_ms = ms;
      report.rows.push_back(std::move(r));
    }
  }
  return report;
}

}  // namespace rbv::harness
