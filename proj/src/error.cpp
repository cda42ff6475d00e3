#include "monoocc/error.hpp"

namespace monoocc {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::DisparityTooSmall: return "DisparityTooSmall";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidIntrinsics: return "InvalidIntrinsics";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::TooFewPixels: return "TooFewPixels";
    case ErrorCode::NoValidPixels: return "NoValidPixels";
    case ErrorCode::InvalidGridSpec: return "InvalidGridSpec";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::NonPositiveValue: return "NonPositiveValue";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonScalarLoss: return "NonScalarLoss";
    case ErrorCode::MissingGradients: return "MissingGradients";
    case ErrorCode::InvalidPercentage: return "InvalidPercentage";
    case ErrorCode::TrainStepMutatedFrozen: return "TrainStepMutatedFrozen";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::CallbackFailure: return "CallbackFailure";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::MaxvalUnsupported: return "MaxvalUnsupported";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::DuplicateFrameId: return "DuplicateFrameId";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace monoocc
