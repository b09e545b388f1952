#pragma once

#include <stdexcept>
#include <string>

namespace codesurv {

enum class ErrorCode {
  // Input errors: bad files, flags or manifests.
  MissingFile,
  MalformedInput,
  DuplicateVersion,
  MissingSource,
  DigestMismatch,
  UnknownGroup,
  GroupMismatch,
  PlanMismatch,
  InvalidArgument,
  // Computation errors: the data cannot support the requested result.
  EmptyBaseline,
  TooFewVersions,
  TooFewPoints,
  NothingToFit,
  NoChangeObserved,
  BadStart,
};

enum class ErrorClass { Input, Computation };

const char* to_string(ErrorCode code);
ErrorClass error_class(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }
  ErrorClass error_class() const { return codesurv::error_class(code_); }

 private:
  ErrorCode code_;
};

}  // namespace codesurv
