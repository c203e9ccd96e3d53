#include "popdiv/error.hpp"

namespace popdiv {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNoHexFound: return "NoHexFound";
    case ErrorCode::kSubjectIncomplete: return "SubjectIncomplete";
    case ErrorCode::kPopulationTooSmall: return "PopulationTooSmall";
    case ErrorCode::kDuplicateResponse: return "DuplicateResponse";
    case ErrorCode::kEmptyPopulation: return "EmptyPopulation";
    case ErrorCode::kTooManySubjects: return "TooManySubjects";
    case ErrorCode::kInconsistentState: return "InconsistentState";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kEmptyPool: return "EmptyPool";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kInvalidPlan: return "InvalidPlan";
    case ErrorCode::kBackendUnreachable: return "BackendUnreachable";
    case ErrorCode::kAuthMissing: return "AuthMissing";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kPermanentHttpError: return "PermanentHttpError";
    case ErrorCode::kUnknownWord: return "UnknownWord";
    case ErrorCode::kTooFewValues: return "TooFewValues";
    case ErrorCode::kSupportMismatch: return "SupportMismatch";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kSchemaError: return "SchemaError";
  }
  return "Unknown";
}

}  // namespace popdiv
