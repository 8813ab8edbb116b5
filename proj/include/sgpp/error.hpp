#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sgpp {

enum class ErrorCode {
  ambiguous_projection,
  outside_tube,
  invalid_manifold,
  non_positive_factor,
  time_out_of_range,
  tau_out_of_range,
  invalid_params,
  bad_range,
  zero_steps,
  step_too_coarse,
  diverged_trajectory,
  no_convergence,
  unassignable_state,
  schema_mismatch,
  config_error,
  unsupported,
};

std::string_view to_string(ErrorCode code) noexcept;

// All library failures surface as this exception; `code()` identifies the
// condition so callers (and tests) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::ambiguous_projection: return "AmbiguousProjection";
    case ErrorCode::outside_tube: return "OutsideTube";
    case ErrorCode::invalid_manifold: return "InvalidManifold";
    case ErrorCode::non_positive_factor: return "NonPositiveFactor";
    case ErrorCode::time_out_of_range: return "TimeOutOfRange";
    case ErrorCode::tau_out_of_range: return "TauOutOfRange";
    case ErrorCode::invalid_params: return "InvalidParams";
    case ErrorCode::bad_range: return "BadRange";
    case ErrorCode::zero_steps: return "ZeroSteps";
    case ErrorCode::step_too_coarse: return "StepTooCoarse";
    case ErrorCode::diverged_trajectory: return "DivergedTrajectory";
    case ErrorCode::no_convergence: return "NoConvergence";
    case ErrorCode::unassignable_state: return "UnassignableState";
    case ErrorCode::schema_mismatch: return "SchemaMismatch";
    case ErrorCode::config_error: return "ConfigError";
    case ErrorCode::unsupported: return "Unsupported";
  }
  return "Unknown";
}

}  // namespace sgpp
