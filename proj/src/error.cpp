#include "forge/error.hpp"

namespace forge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kNotFound: return "not-found";
    case ErrorCode::kDuplicate: return "duplicate";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kBudgetExceeded: return "budget-exceeded";
    case ErrorCode::kExhaustedRetries: return "exhausted-retries";
    case ErrorCode::kMissingScript: return "missing-script";
    case ErrorCode::kProviderFailure: return "provider-failure";
    case ErrorCode::kLanguageLint: return "language-lint";
    case ErrorCode::kDuplicateIdeas: return "duplicate-ideas";
    case ErrorCode::kInapplicable: return "inapplicable";
    case ErrorCode::kInsufficientPopulation: return "insufficient-population";
    case ErrorCode::kNoEligiblePairs: return "no-eligible-pairs";
    case ErrorCode::kMismatch: return "mismatch";
    case ErrorCode::kCorrupted: return "corrupted";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

ErrorCode parse_error_code(std::string_view text) {
  for (int c = 0; c <= static_cast<int>(ErrorCode::kIo); ++c) {
    if (to_string(static_cast<ErrorCode>(c)) == text) return static_cast<ErrorCode>(c);
  }
  throw Error(ErrorCode::kParse, "unknown error code '" + std::string(text) + "'");
}

}  // namespace forge
