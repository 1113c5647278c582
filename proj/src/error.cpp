#include "bnkit/error.hpp"

namespace bnkit {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCycleDetected: return "CycleDetected";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kRowNotNormalized: return "RowNotNormalized";
    case ErrorCode::kInvalidSchema: return "InvalidSchema";
    case ErrorCode::kMissingParentValue: return "MissingParentValue";
    case ErrorCode::kPartialAssignment: return "PartialAssignment";
    case ErrorCode::kIncompleteData: return "IncompleteData";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kTargetInEvidence: return "TargetInEvidence";
    case ErrorCode::kStateSpaceTooLarge: return "StateSpaceTooLarge";
    case ErrorCode::kNoObservedData: return "NoObservedData";
    case ErrorCode::kNoCompletePairs: return "NoCompletePairs";
    case ErrorCode::kEmptyData: return "EmptyData";
    case ErrorCode::kEmptyTestSet: return "EmptyTestSet";
    case ErrorCode::kUnknownVariable: return "UnknownVariable";
    case ErrorCode::kUnknownState: return "UnknownState";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCycleDetected:
    case ErrorCode::kShapeMismatch:
    case ErrorCode::kRowNotNormalized:
    case ErrorCode::kInvalidSchema:
    case ErrorCode::kParseError:
    case ErrorCode::kUnknownVariable:
    case ErrorCode::kUnknownState:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kTargetInEvidence:
      return true;
    default:
      return false;
  }
}

}  // namespace bnkit
