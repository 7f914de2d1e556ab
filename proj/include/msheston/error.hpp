#pragma once

#include <stdexcept>
#include <string>

namespace msh {

enum class ErrorCode {
  InvalidArgument,
  NearSingular,
  BranchCrossing,
  ContourViolation,
  NonConvergence,
  NotCentered,
  NotPositiveDefinite,
  StepExplosion,
  OutOfBand,
  NonFinite,
  ParseError,
  EmptyAfterFilter,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Adaptive integration ran out of subdivisions. Carries the best estimate
/// seen so the caller can decide whether it is usable.
class NonConvergenceError : public Error {
 public:
  NonConvergenceError(const std::string& what, double estimate, double error_bound)
      : Error(ErrorCode::NonConvergence, what), estimate_(estimate), error_bound_(error_bound) {}
  double estimate() const noexcept { return estimate_; }
  double error_bound() const noexcept { return error_bound_; }

 private:
  double estimate_;
  double error_bound_;
};

}  // namespace msh
