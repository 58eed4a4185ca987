#pragma once

#include <stdexcept>
#include <string>

namespace imputekit {

enum class ErrorCode {
  InvalidArgument,
  Io,
  SchemaInvalid,
  SchemaMismatch,
  HeaderMismatch,
  MalformedRow,
  UnparseableNumber,
  UnknownLevel,
  UnknownColumn,
  EmptyResult,
  KeyNotCategorical,
  IncompleteInput,
  FractionTooLarge,
  RetriesExhausted,
  NoDonor,
  TooFewDonors,
  SingularSystem,
  EmptyTraining,
  AllMissingColumn,
  ConstantInput,
  ConstantColumn,
  TooFewPairs,
  ZeroReference,
  UnknownDataset,
  DatasetUnavailable,
  UnknownMethod,
};

const char* to_string(ErrorCode code) noexcept;

/// True for errors caused by the content of the input data (as opposed to
/// bad arguments or I/O failures). The CLI maps these to exit code 2.
bool is_data_error(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  /// Same error with `context` prepended to the message.
  Error with_context(const std::string& context) const {
    return Error(code_, context + ": " + what());
  }

 private:
  ErrorCode code_;
};

}  // namespace imputekit
