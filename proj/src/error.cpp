#include "imputekit/error.hpp"

namespace imputekit {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::SchemaInvalid: return "SchemaInvalid";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::HeaderMismatch: return "HeaderMismatch";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::UnparseableNumber: return "UnparseableNumber";
    case ErrorCode::UnknownLevel: return "UnknownLevel";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::KeyNotCategorical: return "KeyNotCategorical";
    case ErrorCode::IncompleteInput: return "IncompleteInput";
    case ErrorCode::FractionTooLarge: return "FractionTooLarge";
    case ErrorCode::RetriesExhausted: return "RetriesExhausted";
    case ErrorCode::NoDonor: return "NoDonor";
    case ErrorCode::TooFewDonors: return "TooFewDonors";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::EmptyTraining: return "EmptyTraining";
    case ErrorCode::AllMissingColumn: return "AllMissingColumn";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::ConstantColumn: return "ConstantColumn";
    case ErrorCode::TooFewPairs: return "TooFewPairs";
    case ErrorCode::ZeroReference: return "ZeroReference";
    case ErrorCode::UnknownDataset: return "UnknownDataset";
    case ErrorCode::DatasetUnavailable: return "DatasetUnavailable";
    case ErrorCode::UnknownMethod: return "UnknownMethod";
  }
  return "Unknown";
}

bool is_data_error(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::Io:
    case ErrorCode::UnknownDataset:
    case ErrorCode::DatasetUnavailable:
    case ErrorCode::UnknownMethod:
      return false;
    default:
      return true;
  }
}

}  // namespace imputekit
