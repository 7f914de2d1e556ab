#include "msheston/error.hpp"

namespace msh {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NearSingular: return "NearSingular";
    case ErrorCode::BranchCrossing: return "BranchCrossing";
    case ErrorCode::ContourViolation: return "ContourViolation";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::NotCentered: return "NotCentered";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::StepExplosion: return "StepExplosion";
    case ErrorCode::OutOfBand: return "OutOfBand";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyAfterFilter: return "EmptyAfterFilter";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace msh
