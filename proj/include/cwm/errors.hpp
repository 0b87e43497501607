#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cwm {

enum class ErrorCode {
  EEConstraint,
  DimensionMismatch,
  NonFiniteInput,
  DomainError,
  SingularCovariance,
  InconsistentParameters,
  AllComponentsUnderflow,
  DegenerateComponent,
  SingularDesign,
  DegenerateVariance,
  PartitionFailure,
  AllStartsFailed,
  MissingColumn,
  NonNumericCell,
  EmptyFile,
  IndexOutOfRange,
  LengthMismatch,
  InvalidConfig,
  Io,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the hierarchy driver, the CLI) can record it without parsing text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace cwm
