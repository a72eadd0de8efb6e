#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rbv {

enum class ErrorCode {
  precondition,
  empty_domain,
  bad_shape,
  unknown_catalog_entry,
  bad_params,
  empty_region,
  isolated_node,
  no_cubes,
  zero_weight_on_cube,
  zero_weight_on_ball,
  no_candidates,
  bad_partition,
  zero_variation,
  eroded_empty,
  degenerate_gradient,
  parse_error,
  io_error,
  config_error,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::precondition: return "PreconditionViolation";
    case ErrorCode::empty_domain: return "EmptyDomain";
    case ErrorCode::bad_shape: return "BadShape";
    case ErrorCode::unknown_catalog_entry: return "UnknownCatalogEntry";
    case ErrorCode::bad_params: return "BadParams";
    case ErrorCode::empty_region: return "EmptyRegion";
    case ErrorCode::isolated_node: return "IsolatedNode";
    case ErrorCode::no_cubes: return "NoCubes";
    case ErrorCode::zero_weight_on_cube: return "ZeroWeightOnCube";
    case ErrorCode::zero_weight_on_ball: return "ZeroWeightOnBall";
    case ErrorCode::no_candidates: return "NoCandidates";
    case ErrorCode::bad_partition: return "BadPartition";
    case ErrorCode::zero_variation: return "ZeroVariation";
    case ErrorCode::eroded_empty: return "ErodedEmpty";
    case ErrorCode::degenerate_gradient: return "DegenerateGradient";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::config_error: return "ConfigError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) throw Error(code, message);
}

}  // namespace rbv
