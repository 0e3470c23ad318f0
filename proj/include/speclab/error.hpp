#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace speclab {

enum class ErrorCode {
  domain,
  overflow,
  quadrature,
  indefinite,
  ill_conditioned,
  dimension_mismatch,
  step_size,
  solver,
  divergence,
  precondition,
  unsupported,
  config,
  io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::domain: return "domain";
    case ErrorCode::overflow: return "overflow";
    case ErrorCode::quadrature: return "quadrature";
    case ErrorCode::indefinite: return "indefinite";
    case ErrorCode::ill_conditioned: return "ill_conditioned";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::step_size: return "step_size";
    case ErrorCode::solver: return "solver";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::unsupported: return "unsupported";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) throw Error(code, what);
}

}  // namespace speclab
