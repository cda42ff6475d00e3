#pragma once

#include "monoocc/raster.hpp"

namespace monoocc {

/// Affine map s * pred + t taking an arbitrary-scale disparity onto a reference.
struct ScaleShift {
  double scale = 1.0;
  double shift = 0.0;
};

/// Masked variance of pred below this is treated as a singular normal matrix.
inline constexpr double kDegenerateVariance = 1e-12;

/// Least-squares (s, t) minimizing sum over the mask of (s*pred + t - gt)^2.
/// Throws TooFewPixels (< 2 masked) or DegenerateFit (flat pred).
ScaleShift fit_scale_shift(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask);

DisparityMap apply_scale_shift(const DisparityMap& pred, ScaleShift ss);

/// Mean masked squared residual after the optimal affine alignment.
double ssi_loss(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask);

/// Median of reference / pred over masked pixels where both are positive.
/// Throws NoValidPixels when no such pixel exists.
double estimate_frame_scale(const DisparityMap& pred, const DisparityMap& reference,
                            const Mask& mask);

}  // namespace monoocc
