#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "monoocc/raster.hpp"

namespace monoocc {

struct Pixel {
  std::size_t u = 0;
  std::size_t v = 0;
  friend bool operator==(const Pixel&, const Pixel&) = default;
};

/// Bilinear resampling with the align-corners-false convention:
/// src = (dst + 0.5) * (src_size / dst_size) - 0.5, clamped to the image.
DisparityMap bilinear_upsample(const DisparityMap& r, Size2 target);

namespace serial {
DisparityMap bilinear_upsample(const DisparityMap& r, Size2 target);
}  // namespace serial

/// A disparity estimate of one source image, produced at native_resolution.
struct ResolutionEstimate {
  DisparityMap disparity;
  Size2 native_resolution;
};

struct FusionResult {
  DisparityMap fused;
  /// Indices of estimates dropped because their alignment was degenerate.
  std::vector<std::size_t> skipped;
};

/// Multi-resolution merge. The lowest-resolution estimate is the structural
/// base; every other estimate is resampled to target, scale/shift-aligned to
/// the resampled base over all pixels, and blended with weight proportional
/// to its native pixel count. Throws EmptyInput for an empty list.
FusionResult fuse_multi_resolution(const std::vector<ResolutionEstimate>& estimates, Size2 target);

/// Edge pixels: forward-difference gradient magnitude above an Otsu threshold.
/// A constant nonzero magnitude marks every pixel; a flat image has no edges.
Mask edge_map(const DisparityMap& image);

/// Exact Euclidean distance from every pixel to the nearest nonzero mask
/// pixel; +inf everywhere when the mask is empty.
DisparityMap distance_to_edges(const Mask& edges);

namespace serial {
DisparityMap distance_to_edges(const Mask& edges);
}  // namespace serial

/// Fraction of pixels of `image` resampled to `candidate` lying farther than
/// min(w, h) / 10 pixels from the nearest edge.
double far_pixel_fraction(const DisparityMap& image, Size2 candidate);

/// Largest candidate (ascending list) whose far-pixel fraction is at most
/// x_percent, never above `cap`; the smallest candidate when none qualifies.
/// Throws NoCandidates for an empty (or fully capped-out) list.
Size2 select_adaptive_resolution(const DisparityMap& image, double x_percent,
                                 const std::vector<Size2>& candidates,
                                 std::optional<Size2> cap = std::nullopt);

struct UncertaintyMap {
  DisparityMap values;
};

/// u = 1 - 2 |p - 0.5|. Throws OutOfRange for p outside [0, 1].
UncertaintyMap binary_uncertainty(const DisparityMap& prob);

/// The n most uncertain pixels, ties in row-major order.
std::vector<Pixel> select_uncertain_points(const UncertaintyMap& u, std::size_t n);

/// Maps a pixel and its feature vector (one value per feature map) to a class.
using PointRefiner = std::function<ClassId(Pixel, std::span<const double>)>;

/// Overwrites the listed pixels of coarse with the refiner's answer. A
/// throwing refiner surfaces as CallbackFailure naming the pixel.
LabelMap refine_with_hook(const LabelMap& coarse, const std::vector<Pixel>& points,
                          const PointRefiner& refiner,
                          std::span<const DisparityMap> features = {});

}  // namespace monoocc
