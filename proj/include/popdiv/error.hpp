#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace popdiv {

enum class ErrorCode {
  kNoHexFound,
  kSubjectIncomplete,
  kPopulationTooSmall,
  kDuplicateResponse,
  kEmptyPopulation,
  kTooManySubjects,
  kInconsistentState,
  kInvalidConfig,
  kEmptyPool,
  kEmptyCorpus,
  kInvalidPlan,
  kBackendUnreachable,
  kAuthMissing,
  kRateLimited,
  kPermanentHttpError,
  kUnknownWord,
  kTooFewValues,
  kSupportMismatch,
  kIoError,
  kSchemaError,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace popdiv
