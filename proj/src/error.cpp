#include "codesurv/error.hpp"

namespace codesurv {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::DuplicateVersion: return "DuplicateVersion";
    case ErrorCode::MissingSource: return "MissingSource";
    case ErrorCode::DigestMismatch: return "DigestMismatch";
    case ErrorCode::UnknownGroup: return "UnknownGroup";
    case ErrorCode::GroupMismatch: return "GroupMismatch";
    case ErrorCode::PlanMismatch: return "PlanMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyBaseline: return "EmptyBaseline";
    case ErrorCode::TooFewVersions: return "TooFewVersions";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::NothingToFit: return "NothingToFit";
    case ErrorCode::NoChangeObserved: return "NoChangeObserved";
    case ErrorCode::BadStart: return "BadStart";
  }
  return "Unknown";
}

ErrorClass error_class(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyBaseline:
    case ErrorCode::TooFewVersions:
    case ErrorCode::TooFewPoints:
    case ErrorCode::NothingToFit:
    case ErrorCode::NoChangeObserved:
    case ErrorCode::BadStart:
      return ErrorClass::Computation;
    default:
      return ErrorClass::Input;
  }
}

}  // namespace codesurv
