#pragma once

#include <stdexcept>
#include <string>

namespace gliomaseg {

enum class ErrorCode {
  // format / data
  BadMagic,
  UnsupportedDatatype,
  UnsupportedLayout,
  TruncatedPayload,
  NonFiniteVoxel,
  SidecarParse,
  LengthMismatch,
  IoFailure,
  MissingModality,
  DimsMismatch,
  UnknownLabelValue,
  GridMismatch,
  MissingPrediction,
  CheckpointMismatch,
  RecordMismatch,
  EmptyBox,
  DataError,
  // configuration / contract
  ConfigError,
  NonPositiveSigma,
  NonPositiveMagnitude,
  BadVariantId,
  UnsupportedKernel,
  IndivisibleDims,
  PatchLargerThanVolume,
  // numerics
  ShapeMismatch,
  DomainError,
  NonScalarLoss,
  DegenerateSpatial,
  NumericFailure,
};

/// Stable identifier used on the C boundary and in CLI diagnostics.
const char* to_string(ErrorCode code);

/// Process exit code category: 2 config, 3 data, 4 numeric.
int exit_category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace gliomaseg
