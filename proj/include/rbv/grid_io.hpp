#pragma once

// Line-oriented text format for sampled fields:
//
//   dim <n>
//   shape s1 ... sn
//   origin o1 ... on
//   spacing h
//   count <#nodes>
//   <mask 0|1> <value>        (one line per node, row-major)
//
// Reals are written in shortest round-trip form.

#include <charconv>
#include <cmath>
#include <limits>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "rbv/grid.hpp"

namespace rbv {

inline std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_real(std::string_view s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double x = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  require(res.ec == std::errc{} && res.ptr == s.data() + s.size(), ErrorCode::parse_error,
          "not a real number: '" + std::string(s) + "'");
  return x;
}

inline void write_grid_file(std::ostream& out, const SampledField& field) {
  const Grid& g = field.grid();
  out << "dim " << g.dim() << '\n' << "shape";
  for (int i = 0; i < g.dim(); ++i) out << ' ' << g.shape()[i];
  out << '\n' << "origin";
  for (int i = 0; i < g.dim(); ++i) out << ' ' << format_real(g.origin()[i]);
  out << '\n' << "spacing " << format_real(g.spacing()) << '\n';
  out << "count " << g.size() << '\n';
  for (std::size_t i = 0; i < g.size(); ++i) out << (g.masked(i) ? 1 : 0) << ' ' << format_real(field[i]) << '\n';
}

inline void write_grid_file(const std::string& path, const SampledField& field) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::io_error, "cannot open '" + path + "' for writing");
  write_grid_file(out, field);
  require(static_cast<bool>(out), ErrorCode::io_error, "write to '" + path + "' failed");
}

namespace detail {

inline std::vector<std::string> header_line(std::istream& in, const std::string& key, int line_no) {
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorCode::parse_error,
          "line " + std::to_string(line_no) + ": expected '" + key + "'");
  std::istringstream ls(line);
  std::string word;
  std::vector<std::string> tokens;
  while (ls >> word) tokens.push_back(word);
  require(!tokens.empty() && tokens.front() == key, ErrorCode::parse_error,
          "line " + std::to_string(line_no) + ": expected '" + key + "'");
  tokens.erase(tokens.begin());
  return tokens;
}

inline std::size_t parse_count(const std::string& s) {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  require(res.ec == std::errc{} && res.ptr == s.data() + s.size(), ErrorCode::parse_error,
          "not a count: '" + s + "'");
  return v;
}

}  // namespace detail

inline SampledField read_grid_file(std::istream& in, FieldKind kind = FieldKind::function) {
  auto dim_tok = detail::header_line(in, "dim", 1);
  require(dim_tok.size() == 1, ErrorCode::parse_error, "line 1: dim takes one value");
  const auto dim = static_cast<int>(detail::parse_count(dim_tok[0]));
  require(dim >= 1 && dim <= max_dim, ErrorCode::parse_error, "dim must be 1, 2 or 3");

  auto shape_tok = detail::header_line(in, "shape", 2);
  auto origin_tok = detail::header_line(in, "origin", 3);
  require(static_cast<int>(shape_tok.size()) == dim && static_cast<int>(origin_tok.size()) == dim,
          ErrorCode::parse_error, "shape/origin must have dim entries");
  Shape shape{1, 1, 1};
  Point origin{};
  for (int i = 0; i < dim; ++i) {
    shape[i] = detail::parse_count(shape_tok[i]);
    origin[i] = parse_real(origin_tok[i]);
  }
  auto spacing_tok = detail::header_line(in, "spacing", 4);
  require(spacing_tok.size() == 1, ErrorCode::parse_error, "line 4: spacing takes one value");
  const double h = parse_real(spacing_tok[0]);
  auto count_tok = detail::header_line(in, "count", 5);
  require(count_tok.size() == 1, ErrorCode::parse_error, "line 5: count takes one value");
  const std::size_t count = detail::parse_count(count_tok[0]);
  require(count == shape[0] * shape[1] * shape[2], ErrorCode::parse_error, "count does not match shape");

  std::vector<std::uint8_t> mask(count);
  std::vector<double> values(count);
  std::string line;
  for (std::size_t i = 0; i < count; ++i) {
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::parse_error,
            "missing node line " + std::to_string(i));
    std::istringstream ls(line);
    std::string m, v, extra;
    require(static_cast<bool>(ls >> m >> v) && !(ls >> extra) && (m == "0" || m == "1"), ErrorCode::parse_error,
            "line " + std::to_string(i + 6) + ": expected '<0|1> <value>'");
    mask[i] = m == "1" ? 1 : 0;
    values[i] = parse_real(v);
  }
  auto grid = std::make_shared<const Grid>(dim, origin, h, shape, std::move(mask));
  return {std::move(grid), std::move(values), kind};
}

inline SampledField read_grid_file(const std::string& path, FieldKind kind = FieldKind::function) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::io_error, "cannot open '" + path + "'");
  return read_grid_file(in, kind);
}

}  // namespace rbv
