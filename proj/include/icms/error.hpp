#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace icms {

enum class ErrorCode {
  kCycleDetected,
  kUnknownNode,
  kInvalidGraph,
  kInsufficientSamples,
  kNonNumericColumn,
  kColumnMismatch,
  kEmptyDataset,
  kSchemaMismatch,
  kNotMutilated,
  kMissingOutcome,
  kDegenerateTreatment,
  kLengthMismatch,
  kNodeSetMismatch,
  kEmptyInput,
  kInfeasibleRoles,
  kMissingWeights,
  kInvalidPerturbSet,
  kNoAcyclicCompletion,
  kSingleArmData,
  kTooFewModels,
  kInvalidArgument,
  kConfig,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// CLI can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

  // Config problems are caller errors; everything else is a data problem.
  bool is_config_error() const noexcept {
    return code_ == ErrorCode::kConfig || code_ == ErrorCode::kInvalidArgument;
  }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace icms
