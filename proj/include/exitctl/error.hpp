#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace exitctl {

enum class ErrorCode {
  MalformedProblem,
  NegativeLagrangian,
  Blowup,
  Config,
  NotConverged,
  EmptyTarget,
  NonpositiveRhs,
  OutOfGrid,
  DimensionMismatch,
  ProbeOutOfGrid,
  NotMK,
  TargetContainsOrigin,
  Parse,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedProblem: return "MALFORMED_PROBLEM";
    case ErrorCode::NegativeLagrangian: return "NEGATIVE_LAGRANGIAN";
    case ErrorCode::Blowup: return "BLOWUP";
    case ErrorCode::Config: return "CONFIG";
    case ErrorCode::NotConverged: return "NOT_CONVERGED";
    case ErrorCode::EmptyTarget: return "EMPTY_TARGET";
    case ErrorCode::NonpositiveRhs: return "NONPOSITIVE_RHS";
    case ErrorCode::OutOfGrid: return "OUT_OF_GRID";
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::ProbeOutOfGrid: return "PROBE_OUT_OF_GRID";
    case ErrorCode::NotMK: return "NOT_MK";
    case ErrorCode::TargetContainsOrigin: return "TARGET_CONTAINS_ORIGIN";
    case ErrorCode::Parse: return "PARSE";
  }
  return "UNKNOWN";
}

/// Library-wide exception. `value` carries the numeric payload some codes
/// need: the last valid time for BLOWUP, the last update norm for
/// NOT_CONVERGED, the offending node index for NONPOSITIVE_RHS.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, double value = 0.0,
        long count = 0)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        value_(value),
        count_(count) {}

  ErrorCode code() const noexcept { return code_; }
  double value() const noexcept { return value_; }
  long count() const noexcept { return count_; }

 private:
  ErrorCode code_;
  double value_;
  long count_;
};

}  // namespace exitctl
