#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace piha {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  solver_failure,
  empty_input,
  zero_direction,
  negative_bloat,
  empty_polytope,
  unbounded_polytope,
  dimension_unsupported,
  coverage_gap,
  stiffness,
  precondition,
  invariant_exit_unmatched,
  zeno_suspected,
  non_monotone_time,
  dimension_drift,
  budget_exhausted,
  unsplittable,
  parse_error,
  io_error,
};

constexpr std::string_view to_string(ErrorCode c) noexcept {
  switch (c) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::solver_failure: return "solver-failure";
    case ErrorCode::empty_input: return "empty-input";
    case ErrorCode::zero_direction: return "zero-direction";
    case ErrorCode::negative_bloat: return "negative-bloat";
    case ErrorCode::empty_polytope: return "empty-polytope";
    case ErrorCode::unbounded_polytope: return "unbounded-polytope";
    case ErrorCode::dimension_unsupported: return "dimension-unsupported";
    case ErrorCode::coverage_gap: return "coverage-gap";
    case ErrorCode::stiffness: return "stiffness";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::invariant_exit_unmatched: return "invariant-exit-unmatched";
    case ErrorCode::zeno_suspected: return "zeno-suspected";
    case ErrorCode::non_monotone_time: return "non-monotone-time";
    case ErrorCode::dimension_drift: return "dimension-drift";
    case ErrorCode::budget_exhausted: return "budget-exhausted";
    case ErrorCode::unsplittable: return "unsplittable";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown";
}

/// Every failure in the library is reported through this type; `code()`
/// lets callers branch without parsing the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace piha
