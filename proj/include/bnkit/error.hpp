#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bnkit {

enum class ErrorCode {
  kCycleDetected,
  kShapeMismatch,
  kRowNotNormalized,
  kInvalidSchema,
  kMissingParentValue,
  kPartialAssignment,
  kIncompleteData,
  kParseError,
  kTargetInEvidence,
  kStateSpaceTooLarge,
  kNoObservedData,
  kNoCompletePairs,
  kEmptyData,
  kEmptyTestSet,
  kUnknownVariable,
  kUnknownState,
  kInvalidArgument,
};

std::string_view to_string(ErrorCode code);

// Codes that describe malformed input rather than a failure while computing.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace bnkit
