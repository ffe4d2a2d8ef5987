#include "common/error.hpp"

namespace gliomaseg {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedDatatype: return "UnsupportedDatatype";
    case ErrorCode::UnsupportedLayout: return "UnsupportedLayout";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::NonFiniteVoxel: return "NonFiniteVoxel";
    case ErrorCode::SidecarParse: return "SidecarParse";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::MissingModality: return "MissingModality";
    case ErrorCode::DimsMismatch: return "DimsMismatch";
    case ErrorCode::UnknownLabelValue: return "UnknownLabelValue";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::MissingPrediction: return "MissingPrediction";
    case ErrorCode::CheckpointMismatch: return "CheckpointMismatch";
    case ErrorCode::RecordMismatch: return "RecordMismatch";
    case ErrorCode::EmptyBox: return "EmptyBox";
    case ErrorCode::DataError: return "DataError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::NonPositiveSigma: return "NonPositiveSigma";
    case ErrorCode::NonPositiveMagnitude: return "NonPositiveMagnitude";
    case ErrorCode::BadVariantId: return "BadVariantId";
    case ErrorCode::UnsupportedKernel: return "UnsupportedKernel";
    case ErrorCode::IndivisibleDims: return "IndivisibleDims";
    case ErrorCode::PatchLargerThanVolume: return "PatchLargerThanVolume";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DomainError: return "DomainError";
    case ErrorCode::NonScalarLoss: return "NonScalarLoss";
    case ErrorCode::DegenerateSpatial: return "DegenerateSpatial";
    case ErrorCode::NumericFailure: return "NumericFailure";
  }
  return "Unknown";
}

int exit_category(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::NonPositiveSigma:
    case ErrorCode::NonPositiveMagnitude:
    case ErrorCode::BadVariantId:
    case ErrorCode::UnsupportedKernel:
    case ErrorCode::IndivisibleDims:
    case ErrorCode::PatchLargerThanVolume:
      return 2;
    case ErrorCode::ShapeMismatch:
    case ErrorCode::DomainError:
    case ErrorCode::NonScalarLoss:
    case ErrorCode::DegenerateSpatial:
    case ErrorCode::NumericFailure:
      return 4;
    default:
      return 3;
  }
}

}  // namespace gliomaseg
