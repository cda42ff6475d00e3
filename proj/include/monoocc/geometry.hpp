#pragma once

#include <optional>
#include <vector>

#include "monoocc/raster.hpp"

namespace monoocc {

/// Pinhole intrinsics plus stereo baseline. Focal lengths and principal point
/// are in pixels, the baseline in meters.
struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double ox = 0.0;
  double oy = 0.0;
  double baseline = 1.0;

  /// Throws InvalidIntrinsics unless fx, fy, baseline > 0 and all fields finite.
  void validate() const;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  std::optional<ClassId> label;

  friend bool operator==(const Point3&, const Point3&) = default;
};

/// Points in row-major source-pixel order (v outer, u inner).
struct LabeledCloud {
  std::vector<Point3> points;

  std::size_t size() const { return points.size(); }
};

struct PixelDisparity {
  double u = 0.0;
  double v = 0.0;
  double d = 0.0;
};

inline constexpr double kDefaultEpsilonDisparity = 1e-6;

/// Image plane -> camera frame:
///   x = b (u - ox) / d,  y = b fx (v - oy) / (fy d),  z = b fx / d.
/// Throws DisparityTooSmall when d <= epsilon.
Point3 project_pixel(double u, double v, double d, const CameraIntrinsics& k,
                     double epsilon = kDefaultEpsilonDisparity);

/// Algebraic inverse of project_pixel. Throws NonPositiveDepth when z <= 0.
PixelDisparity unproject_point(const Point3& p, const CameraIntrinsics& k);

/// One labeled point per pixel with disparity > min_disparity. Pixels labeled
/// kUnlabeled yield points without a class. OpenMP-parallel over rows.
LabeledCloud project_map(const DisparityMap& disparity, const LabelMap& labels,
                         const CameraIntrinsics& k, double min_disparity);

namespace serial {
LabeledCloud project_map(const DisparityMap& disparity, const LabelMap& labels,
                         const CameraIntrinsics& k, double min_disparity);
}  // namespace serial

}  // namespace monoocc
