#pragma once

// Outputs of the single-module subcommands (weights, riesz-var, sobolev,
// varexp). Each takes one experiment object and evaluates it at level 0.

#include <set>
#include <string>

#include "rbv/harness/runner.hpp"

namespace rbv::harness {

/// The experiment object a single subcommand operates on: either the config
/// itself or its only entry in "experiments".
inline Node single_experiment(const json& cfg) {
  const Node root(cfg, "");
  if (!cfg.is_object()) root.fail("config must be a JSON object");
  if (!root.has("experiments")) return root;
  const auto exps = root.at("experiments");
  if (exps.size() != 1) exps.fail("this subcommand takes exactly one experiment");
  return exps[0];
}

namespace detail {

inline json point_json(const Point& x, int dim) {
  json a = json::array();
  for (int i = 0; i < dim; ++i) a.push_back(rbv::detail::real_to_json(x[i]));
  return a;
}

/// Flat objects as two-column CSV; nested values are written as JSON text.
inline std::string object_csv(const json& obj) {
  std::string out = "key,value\n";
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const auto& v = it.value();
    out += it.key() + "," + rbv::detail::csv_field(v.is_number() ? rbv::format_real(v.get<double>()) : v.dump()) + "\n";
  }
  return out;
}

}  // namespace detail

inline std::string render_object(const json& obj, ReportFormat format) {
  return format == ReportFormat::json ? obj.dump(2) + "\n" : detail::object_csv(obj);
}

struct WeightsRow {
  std::string quantity;
  double p_or_s = 0.0;
  std::string family;
  int levels = 0;
  double value = 0.0;
};

inline std::vector<WeightsRow> weights_command(const Node& e) {
  const auto s = parse_weights(e);
  const auto g = make_grid(s.grid, 0);
  CubeFamily family;
  const auto d = weights_diagnostics(s, g, family);
  std::set<double> sides;
  for (const auto& c : family.cubes) sides.insert(c.side);
  const int levels = static_cast<int>(sides.size());
  const std::string fam = to_string(family.provenance);
  std::vector<WeightsRow> rows;
  for (const auto& [p, v] : d.ap_constant) rows.push_back({"ap_constant", p, fam, levels, v});
  rows.push_back({"a1_constant", 1.0, fam, levels, d.a1_constant});
  for (const auto& [x, v] : d.rh_constant) rows.push_back({"rh_constant", x, fam, levels, v});
  if (!s.doubling_radii.empty()) rows.push_back({"doubling_constant", 0.0, fam, levels, d.doubling_constant});
  rows.push_back({"rw_estimate", s.rw_threshold, fam, levels,
                  d.rw_estimate.bounded ? d.rw_estimate.value : std::numeric_limits<double>::infinity()});
  return rows;
}

inline std::string render_weights(const std::vector<WeightsRow>& rows, ReportFormat format) {
  if (format == ReportFormat::json) {
    json a = json::array();
    for (const auto& r : rows)
      a.push_back({{"quantity", r.quantity}, {"p_or_s", rbv::detail::real_to_json(r.p_or_s)}, {"family", r.family},
                   {"levels", r.levels}, {"value", rbv::detail::real_to_json(r.value)}});
    return a.dump(2) + "\n";
  }
  std::string out = "quantity,p_or_s,family,levels,value\n";
  for (const auto& r : rows)
    out += r.quantity + "," + rbv::format_real(r.p_or_s) + "," + r.family + "," + std::to_string(r.levels) + "," +
           rbv::format_real(r.value) + "\n";
  return out;
}

inline json riesz_var_command(const Node& e) {
  const auto gs = parse_grid(e.at("grid"));
  const auto g = make_grid(gs, 0);
  const auto f = make_field(parse_field(e.at("function"), FieldKind::function), g, FieldKind::function);
  const auto w = make_field(detail::weight_spec(e), g, FieldKind::weight);
  const double p = detail::parse_p(e);
  const auto radii = radii_for(parse_radii(e.at("radii")), *g);
  const auto method = detail::parse_method(e, gs.dim);
  const auto sol = riesz_variation(f, w, p, radii, method,
                                   static_cast<std::size_t>(e.integer_or("max_iters", 10000)));
  json balls = json::array();
  for (const auto& b : sol.scores)
    balls.push_back({{"center", detail::point_json(b.ball.center, gs.dim)},
                     {"radius", rbv::detail::real_to_json(b.ball.radius)},
                     {"osc", rbv::detail::real_to_json(b.oscillation)},
                     {"mass", rbv::detail::real_to_json(b.weight_mass)},
                     {"score", rbv::detail::real_to_json(b.score)}});
  json r = json::array();
  for (double x : radii) r.push_back(rbv::detail::real_to_json(x));
  return {{"p", p},
          {"method", to_string(method)},
          {"h", g->spacing()},
          {"radii", r},
          {"total", rbv::detail::real_to_json(sol.total)},
          {"variation", rbv::detail::real_to_json(sol.variation)},
          {"n_balls", sol.collection.size()},
          {"balls", balls}};
}

inline json sobolev_command(const Node& e) {
  const auto g = make_grid(parse_grid(e.at("grid")), 0);
  const auto f = make_field(parse_field(e.at("function"), FieldKind::function), g, FieldKind::function);
  const auto w = make_field(detail::weight_spec(e), g, FieldKind::weight);
  const double p = detail::parse_p(e);
  const auto n = sobolev_norm(f, w, p);
  return {{"lp", rbv::detail::real_to_json(n.lp)},
          {"grad_lp", rbv::detail::real_to_json(n.grad_lp)},
          {"total", rbv::detail::real_to_json(n.total)},
          {"p", p},
          {"h", g->spacing()}};
}

inline json varexp_command(const Node& e, std::uint64_t seed) {
  const auto gs = parse_grid(e.at("grid"));
  const auto g = make_grid(gs, 0);
  const auto f = make_field(parse_field(e.at("function"), FieldKind::function), g, FieldKind::function);
  const auto pf = make_exponent(parse_exponent(e.at("exponent")), g);
  const double tol = e.number_or("tol", 1e-10);
  const auto lh = lh_constants(pf, static_cast<std::size_t>(e.integer_or("pair_budget", 200000)), seed);
  json out = {{"h", g->spacing()},
              {"p_minus", pf.p_minus()},
              {"p_plus", pf.p_plus()},
              {"lh_c0", rbv::detail::real_to_json(lh.c0_estimate)},
              {"lh_c_infinity", rbv::detail::real_to_json(lh.c_infinity_estimate)},
              {"p_infinity", lh.p_infinity_used},
              {"harmonic_mean", rbv::detail::real_to_json(harmonic_mean_exponent(pf, WholeDomain{}))},
              {"modular", rbv::detail::real_to_json(modular(f, pf))},
              {"luxemburg_norm", rbv::detail::real_to_json(luxemburg_norm(f, pf, WholeDomain{}, tol))}};
  if (e.has("radii")) {
    const auto sv = rbv_var_seminorm(f, pf, radii_for(parse_radii(e.at("radii")), *g),
                                     detail::parse_method(e, gs.dim), tol);
    out["rbv_var_seminorm"] = rbv::detail::real_to_json(sv.value);
    out["packings_explored"] = sv.packings_explored;
  }
  return out;
}

inline std::string catalog_text(ReportFormat format) {
  if (format == ReportFormat::json) {
    json a = json::array();
    for (const auto& c : catalog()) {
      json params = json::object();
      for (const auto& [k, v] : c.defaults) params[k] = v;
      a.push_back({{"name", c.name},
                   {"kind", c.kind == FieldKind::weight ? "weight" : "function"},
                   {"params", params},
                   {"description", c.description}});
    }
    return a.dump(2) + "\n";
  }
  std::string out = "name,kind,params,description\n";
  for (const auto& c : catalog()) {
    std::string params;
    for (const auto& [k, v] : c.defaults) params += (params.empty() ? "" : ";") + k + "=" + rbv::format_real(v);
    out += c.name + "," + (c.kind == FieldKind::weight ? "weight" : "function") + "," + rbv::detail::csv_field(params) + "," +
           rbv::detail::csv_field(c.description) + "\n";
  }
  return out;
}

}  // namespace rbv::harness
