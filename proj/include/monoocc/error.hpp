#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace monoocc {

enum class ErrorCode {
  // geometry
  DisparityTooSmall,
  NonPositiveDepth,
  DimensionMismatch,
  InvalidIntrinsics,
  // alignment
  DegenerateFit,
  TooFewPixels,
  NoValidPixels,
  // voxel
  InvalidGridSpec,
  SpecMismatch,
  // metrics
  EmptyMask,
  NonPositiveValue,
  InvalidArgument,
  // autodiff
  ShapeMismatch,
  NonScalarLoss,
  MissingGradients,
  // patchwise
  InvalidPercentage,
  TrainStepMutatedFrozen,
  // pseudolabel
  EmptyInput,
  NoCandidates,
  OutOfRange,
  CallbackFailure,
  // io
  MalformedHeader,
  TruncatedData,
  MaxvalUnsupported,
  BadMagic,
  SizeMismatch,
  DuplicateFrameId,
  MissingFile,
  IoFailure,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-checkable code next to the human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace monoocc
