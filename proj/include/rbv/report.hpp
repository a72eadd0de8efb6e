#pragma once

// Structured experiment output. CSV columns:
//   experiment,quantity,params,value,tolerance,status,runtime_ms
// JSON mirrors the rows and adds run metadata.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "rbv/error.hpp"
#include "rbv/grid_io.hpp"

namespace rbv {

enum class Status { pass, fail, info };

inline std::string to_string(Status s) {
  switch (s) {
    case Status::pass: return "pass";
    case Status::fail: return "fail";
    case Status::info: return "info";
  }
  return "info";
}

inline Status parse_status(const std::string& s) {
  if (s == "pass") return Status::pass;
  if (s == "fail") return Status::fail;
  if (s == "info") return Status::info;
  throw Error(ErrorCode::parse_error, "unknown status '" + s + "'");
}

struct ReportRow {
  std::string experiment;
  std::string quantity;
  std::string params;
  double value = 0.0;
  double tolerance = 0.0;  // threshold a pass/fail row was judged against
  Status status = Status::info;
  double runtime_ms = 0.0;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct ReportMetadata {
  std::string version;
  std::string config_hash;
  std::uint64_t seed = 0;

  friend bool operator==(const ReportMetadata&, const ReportMetadata&) = default;
};

struct Report {
  ReportMetadata metadata;
  std::vector<ReportRow> rows;

  bool has_failure() const {
    for (const auto& r : rows)
      if (r.status == Status::fail) return true;
    return false;
  }

  friend bool operator==(const Report&, const Report&) = default;
};

/// "k1=v1;k2=v2" with reals in shortest round-trip form.
inline std::string params_string(const std::vector<std::pair<std::string, double>>& kv,
                                 const std::vector<std::pair<std::string, std::string>>& text = {}) {
  std::string out;
  auto add = [&](const std::string& k, const std::string& v) {
    if (!out.empty()) out += ';';
    out += k + '=' + v;
  };
  for (const auto& [k, v] : text) add(k, v);
  for (const auto& [k, v] : kv) add(k, format_real(v));
  return out;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline nlohmann::json real_to_json(double x) {
  if (std::isfinite(x)) return x;
  return format_real(x);
}

inline double real_from_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_real(j.get<std::string>());
  return j.get<double>();
}

}  // namespace detail

inline std::string to_csv(const Report& report) {
  std::ostringstream out;
  out << "experiment,quantity,params,value,tolerance,status,runtime_ms\n";
  for (const auto& r : report.rows) {
    out << detail::csv_field(r.experiment) << ',' << detail::csv_field(r.quantity) << ','
        << detail::csv_field(r.params) << ',' << format_real(r.value) << ',' << format_real(r.tolerance) << ','
        << to_string(r.status) << ',' << format_real(r.runtime_ms) << '\n';
  }
  return out.str();
}

inline nlohmann::json to_json(const Report& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"experiment", r.experiment},
                    {"quantity", r.quantity},
                    {"params", r.params},
                    {"value", detail::real_to_json(r.value)},
                    {"tolerance", detail::real_to_json(r.tolerance)},
                    {"status", to_string(r.status)},
                    {"runtime_ms", detail::real_to_json(r.runtime_ms)}});
  }
  return {{"metadata",
           {{"version", report.metadata.version},
            {"config_hash", report.metadata.config_hash},
            {"seed", report.metadata.seed}}},
          {"rows", rows}};
}

inline Report report_from_json(const nlohmann::json& j) {
  try {
    Report r;
    const auto& m = j.at("metadata");
    r.metadata.version = m.at("version").get<std::string>();
    r.metadata.config_hash = m.at("config_hash").get<std::string>();
    r.metadata.seed = m.at("seed").get<std::uint64_t>();
    for (const auto& row : j.at("rows")) {
      ReportRow x;
      x.experiment = row.at("experiment").get<std::string>();
      x.quantity = row.at("quantity").get<std::string>();
      x.params = row.at("params").get<std::string>();
      x.value = detail::real_from_json(row.at("value"));
      x.tolerance = detail::real_from_json(row.at("tolerance"));
      x.status = parse_status(row.at("status").get<std::string>());
      x.runtime_ms = detail::real_from_json(row.at("runtime_ms"));
      r.rows.push_back(std::move(x));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, std::string("malformed report: ") + e.what());
  }
}

enum class ReportFormat { csv, json };

inline ReportFormat parse_report_format(const std::string& s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw Error(ErrorCode::config_error, "format must be csv or json, got '" + s + "'");
}

inline std::string render_report(const Report& report, ReportFormat format) {
  return format == ReportFormat::csv ? to_csv(report) : to_json(report).dump(2) + "\n";
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::io_error, "cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  require(static_cast<bool>(out), ErrorCode::io_error, "write to '" + path + "' failed");
}

inline void emit_report(const Report& report, ReportFormat format, const std::string& path) {
  write_text_file(path, render_report(report, format));
}

}  // namespace rbv
