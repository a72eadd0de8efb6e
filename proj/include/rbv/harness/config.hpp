#pragma once

// JSON experiment configuration. Field access goes through Node so that every
// ConfigError names the offending path, e.g. "experiments[1].grid.h".

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "rbv/catalog.hpp"
#include "rbv/error.hpp"
#include "rbv/grid.hpp"
#include "rbv/grid_io.hpp"
#include "rbv/varexp.hpp"

namespace rbv::harness {

using nlohmann::json;

inline constexpr const char* version = "0.1.0";

class Node {
 public:
  Node(const json& j, std::string path) : j_(&j), path_(std::move(path)) {}

  const json& raw() const { return *j_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorCode::config_error, (path_.empty() ? std::string("<root>") : path_) + ": " + msg);
  }

  bool has(const std::string& key) const { return j_->is_object() && j_->contains(key); }

  Node at(const std::string& key) const {
    if (!j_->is_object()) fail("expected an object");
    if (!j_->contains(key)) child_path(key).fail_missing();
    return {(*j_)[key], child_path(key).path_};
  }

  std::size_t size() const {
    if (!j_->is_array()) fail("expected an array");
    return j_->size();
  }

  Node operator[](std::size_t i) const { return {(*j_)[i], path_ + "[" + std::to_string(i) + "]"}; }

  double as_number() const {
    if (!j_->is_number()) fail("expected a number");
    return j_->get<double>();
  }

  std::string as_string() const {
    if (!j_->is_string()) fail("expected a string");
    return j_->get<std::string>();
  }

  std::vector<double> as_numbers() const {
    std::vector<double> out;
    for (std::size_t i = 0; i < size(); ++i) out.push_back((*this)[i].as_number());
    return out;
  }

  double number(const std::string& key) const { return at(key).as_number(); }
  double number_or(const std::string& key, double def) const { return has(key) ? number(key) : def; }

  int integer(const std::string& key) const {
    const double v = number(key);
    if (v != std::floor(v) || std::abs(v) > 1e9) at(key).fail("expected an integer");
    return static_cast<int>(v);
  }
  int integer_or(const std::string& key, int def) const { return has(key) ? integer(key) : def; }

  std::string string(const std::string& key) const { return at(key).as_string(); }
  std::string string_or(const std::string& key, const std::string& def) const { return has(key) ? string(key) : def; }

  bool boolean_or(const std::string& key, bool def) const {
    if (!has(key)) return def;
    const auto& v = (*j_)[key];
    if (!v.is_boolean()) at(key).fail("expected true or false");
    return v.get<bool>();
  }

  std::vector<double> numbers(const std::string& key) const { return at(key).as_numbers(); }
  std::vector<double> numbers_or(const std::string& key, std::vector<double> def) const {
    return has(key) ? numbers(key) : def;
  }

 private:
  Node child_path(const std::string& key) const { return {*j_, path_.empty() ? key : path_ + "." + key}; }
  [[noreturn]] void fail_missing() const { fail("missing required field"); }

  const json* j_;
  std::string path_;
};

inline json parse_json_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::config_error, origin + ": invalid JSON: " + e.what());
  }
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::config_error, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

/// FNV-1a over the canonical (sorted-key, compact) dump.
inline std::string config_hash(const json& j) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct GridSpec {
  int dim = 1;
  Point lower{};
  Point upper{};
  double h = 0.0;
  std::optional<Ball> mask_ball;  // keep only nodes strictly inside
};

inline GridSpec parse_grid(const Node& n) {
  GridSpec g;
  g.dim = n.integer("dim");
  if (g.dim < 1 || g.dim > max_dim) n.at("dim").fail("dim must be 1, 2 or 3");
  const auto lo = n.numbers("lower"), hi = n.numbers("upper");
  if (static_cast<int>(lo.size()) != g.dim) n.at("lower").fail("needs dim entries");
  if (static_cast<int>(hi.size()) != g.dim) n.at("upper").fail("needs dim entries");
  g.h = n.number("h");
  if (!(g.h > 0.0)) n.at("h").fail("spacing must be positive");
  for (int i = 0; i < g.dim; ++i) {
    g.lower[i] = lo[i];
    g.upper[i] = hi[i];
    if (!(hi[i] > lo[i])) n.at("upper").fail("upper must exceed lower");
    const double cells = (hi[i] - lo[i]) / g.h;
    if (std::abs(cells - std::round(cells)) > 1e-6) n.at("h").fail("h must divide the box extent");
  }
  if (n.has("mask_ball")) {
    const auto mb = n.at("mask_ball");
    const auto c = mb.numbers("center");
    if (static_cast<int>(c.size()) != g.dim) mb.at("center").fail("needs dim entries");
    Ball b;
    for (int i = 0; i < g.dim; ++i) b.center[i] = c[i];
    b.radius = mb.number("radius");
    g.mask_ball = b;
  }
  return g;
}

/// Grid of refinement level `level` (spacing h / 2^level).
inline GridPtr make_grid(const GridSpec& spec, int level) {
  const double h = spec.h / std::ldexp(1.0, level);
  Shape shape{1, 1, 1};
  for (int i = 0; i < spec.dim; ++i)
    shape[i] = static_cast<std::size_t>(std::llround((spec.upper[i] - spec.lower[i]) / h)) + 1;
  std::function<bool(const Point&)> inside;
  if (spec.mask_ball) {
    const Ball b = *spec.mask_ball;
    const int dim = spec.dim;
    inside = [b, dim](const Point& x) { return distance(x, b.center, dim) < b.radius; };
  }
  return build_grid(spec.dim, spec.lower, h, shape, inside);
}

struct FieldSpec {
  std::string catalog;  // empty when loaded from a file
  Params params;
  std::string file;
};

inline FieldSpec parse_field(const Node& n, FieldKind kind) {
  FieldSpec f;
  if (n.has("file")) {
    f.file = n.string("file");
    return f;
  }
  f.catalog = n.string("catalog");
  const auto* entry = find_catalog_entry(f.catalog);
  if (!entry) n.at("catalog").fail("unknown catalog entry '" + f.catalog + "'");
  if (entry->kind != kind)
    n.at("catalog").fail("'" + f.catalog + "' is a " + (entry->kind == FieldKind::weight ? "weight" : "function") +
                         " family");
  if (n.has("params")) {
    const auto p = n.at("params");
    if (!p.raw().is_object()) p.fail("expected an object");
    for (auto it = p.raw().begin(); it != p.raw().end(); ++it) f.params[it.key()] = p.at(it.key()).as_number();
  }
  return f;
}

inline SampledField make_field(const FieldSpec& spec, const GridPtr& grid, FieldKind kind) {
  if (!spec.file.empty()) {
    auto f = read_grid_file(spec.file, kind);
    require(same_geometry(f.grid(), *grid), ErrorCode::config_error,
            "field file '" + spec.file + "' does not match the configured grid");
    return f;
  }
  return sample_catalog(grid, spec.catalog, spec.params);
}

struct ExponentSpec {
  std::optional<double> constant;
  FieldSpec field;
  std::optional<double> p_infinity;
};

inline ExponentSpec parse_exponent(const Node& n) {
  ExponentSpec e;
  if (n.raw().is_number()) {
    e.constant = n.as_number();
  } else if (n.has("constant")) {
    e.constant = n.number("constant");
  } else {
    e.field = parse_field(n, FieldKind::function);
  }
  if (e.constant && !(*e.constant >= 1.0)) n.fail("exponent must be >= 1");
  if (n.has("p_infinity")) e.p_infinity = n.number("p_infinity");
  return e;
}

inline ExponentFunction make_exponent(const ExponentSpec& spec, const GridPtr& grid) {
  if (spec.constant) {
    return ExponentFunction(SampledField(grid, std::vector<double>(grid->size(), *spec.constant)), spec.p_infinity);
  }
  return ExponentFunction(make_field(spec.field, grid, FieldKind::function), spec.p_infinity);
}

/// Either an explicit list or {"dyadic": [kmin, kmax]} for 2^-k, k = kmin..kmax.
inline std::vector<double> parse_radii(const Node& n) {
  std::vector<double> r;
  if (n.raw().is_array()) {
    r = n.as_numbers();
  } else if (n.has("dyadic")) {
    const auto k = n.numbers("dyadic");
    if (k.size() != 2 || k[0] > k[1] || k[0] != std::floor(k[0]) || k[1] != std::floor(k[1]))
      n.at("dyadic").fail("expected [kmin, kmax] with integer kmin <= kmax");
    for (int j = static_cast<int>(k[0]); j <= static_cast<int>(k[1]); ++j) r.push_back(std::ldexp(1.0, -j));
  } else {
    n.fail("expected a list of radii or {\"dyadic\": [kmin, kmax]}");
  }
  if (r.empty()) n.fail("empty radii list");
  for (double x : r)
    if (!(x > 0.0)) n.fail("radii must be positive");
  return r;
}

/// Radii usable on a grid: those >= 2h.
inline std::vector<double> radii_for(const std::vector<double>& radii, const Grid& grid) {
  std::vector<double> out;
  for (double r : radii)
    if (r >= 2.0 * grid.spacing() * (1.0 - 1e-12)) out.push_back(r);
  return out;
}

inline std::vector<Ball> parse_balls(const Node& n, int dim) {
  std::vector<Ball> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const auto b = n[i];
    const auto c = b.numbers("center");
    if (static_cast<int>(c.size()) != dim) b.at("center").fail("needs dim entries");
    Ball ball;
    for (int k = 0; k < dim; ++k) ball.center[k] = c[k];
    ball.radius = b.number("radius");
    if (!(ball.radius > 0.0)) b.at("radius").fail("radius must be positive");
    out.push_back(ball);
  }
  return out;
}

inline double threshold_at_least_one(const Node& n, const std::string& key, double def) {
  const double v = n.number_or(key, def);
  if (!(v > 1.0)) n.at(key).fail("threshold must be > 1");
  return v;
}

}  // namespace rbv::harness
