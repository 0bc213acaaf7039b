#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace forge {

enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kDuplicate,
  kConflict,
  kOutOfRange,
  kPrecondition,
  kBudgetExceeded,
  kExhaustedRetries,
  kMissingScript,
  kProviderFailure,
  kLanguageLint,
  kDuplicateIdeas,
  kInapplicable,
  kInsufficientPopulation,
  kNoEligiblePairs,
  kMismatch,
  kCorrupted,
  kParse,
  kIo,
};

std::string_view to_string(ErrorCode code);
ErrorCode parse_error_code(std::string_view text);

// Every failure surfaced by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace forge
