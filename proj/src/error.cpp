#include "icms/error.hpp"

namespace icms {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kCycleDetected: return "CycleDetected";
    case ErrorCode::kUnknownNode: return "UnknownNode";
    case ErrorCode::kInvalidGraph: return "InvalidGraph";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kNonNumericColumn: return "NonNumericColumn";
    case ErrorCode::kColumnMismatch: return "ColumnMismatch";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kNotMutilated: return "NotMutilated";
    case ErrorCode::kMissingOutcome: return "MissingOutcome";
    case ErrorCode::kDegenerateTreatment: return "DegenerateTreatment";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kNodeSetMismatch: return "NodeSetMismatch";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInfeasibleRoles: return "InfeasibleRoles";
    case ErrorCode::kMissingWeights: return "MissingWeights";
    case ErrorCode::kInvalidPerturbSet: return "InvalidPerturbSet";
    case ErrorCode::kNoAcyclicCompletion: return "NoAcyclicCompletion";
    case ErrorCode::kSingleArmData: return "SingleArmData";
    case ErrorCode::kTooFewModels: return "TooFewModels";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace icms
