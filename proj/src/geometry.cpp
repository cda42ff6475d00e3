#include "monoocc/geometry.hpp"

#include <cmath>
#include <string>

namespace monoocc {

void CameraIntrinsics::validate() const {
  const bool finite = std::isfinite(fx) && std::isfinite(fy) && std::isfinite(ox) &&
                      std::isfinite(oy) && std::isfinite(baseline);
  if (!finite || fx <= 0.0 || fy <= 0.0 || baseline <= 0.0) {
    throw Error(ErrorCode::InvalidIntrinsics,
                "need fx > 0, fy > 0, baseline > 0 and finite principal point");
  }
}

Point3 project_pixel(double u, double v, double d, const CameraIntrinsics& k, double epsilon) {
  if (!(d > epsilon)) {
    throw Error(ErrorCode::DisparityTooSmall,
                "disparity " + std::to_string(d) + " at or below " + std::to_string(epsilon));
  }
  Point3 p;
  p.x = k.baseline * (u - k.ox) / d;
  p.y = k.baseline * k.fx * (v - k.oy) / (k.fy * d);
  p.z = k.baseline * k.fx / d;
  return p;
}

PixelDisparity unproject_point(const Point3& p, const CameraIntrinsics& k) {
  if (!(p.z > 0.0)) {
    throw Error(ErrorCode::NonPositiveDepth, "point depth must be positive");
  }
  return {p.x * k.fx / p.z + k.ox, p.y * k.fy / p.z + k.oy, k.baseline * k.fx / p.z};
}

namespace {

void check_inputs(const DisparityMap& disparity, const LabelMap& labels,
                  const CameraIntrinsics& k) {
  require_same_shape(disparity, labels, "disparity and label rasters differ in shape");
  k.validate();
}

// Threshold filtering is done here so project_pixel never throws inside the
// parallel region; min_disparity is floored at the projection epsilon.
inline bool keep(double d, double min_disparity) {
  return d > min_disparity && d > kDefaultEpsilonDisparity;
}

inline Point3 labeled_point(std::size_t u, std::size_t v, double d, ClassId label,
                            const CameraIntrinsics& k) {
  Point3 p = project_pixel(static_cast<double>(u), static_cast<double>(v), d, k);
  if (label != kUnlabeled) p.label = label;
  return p;
}

}  // namespace

namespace serial {

LabeledCloud project_map(const DisparityMap& disparity, const LabelMap& labels,
                         const CameraIntrinsics& k, double min_disparity) {
  check_inputs(disparity, labels, k);
  LabeledCloud cloud;
  for (std::size_t v = 0; v < disparity.height(); ++v) {
    for (std::size_t u = 0; u < disparity.width(); ++u) {
      const double d = disparity(u, v);
      if (keep(d, min_disparity)) cloud.points.push_back(labeled_point(u, v, d, labels(u, v), k));
    }
  }
  return cloud;
}

}  // namespace serial

LabeledCloud project_map(const DisparityMap& disparity, const LabelMap& labels,
                         const CameraIntrinsics& k, double min_disparity) {
  check_inputs(disparity, labels, k);
  const auto height = static_cast<std::ptrdiff_t>(disparity.height());
  const std::size_t width = disparity.width();

  // Pass 1 counts survivors per row; an exclusive scan gives each row its
  // output offset, which keeps the row-major order under any schedule.
  std::vector<std::size_t> offsets(disparity.height() + 1, 0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t v = 0; v < height; ++v) {
    std::size_t n = 0;
    for (std::size_t u = 0; u < width; ++u) n += keep(disparity(u, v), min_disparity);
    offsets[v + 1] = n;
  }
  for (std::size_t v = 0; v < disparity.height(); ++v) offsets[v + 1] += offsets[v];

  LabeledCloud cloud;
  cloud.points.resize(offsets.back());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t v = 0; v < height; ++v) {
    std::size_t out = offsets[v];
    for (std::size_t u = 0; u < width; ++u) {
      const double d = disparity(u, v);
      if (keep(d, min_disparity)) cloud.points[out++] = labeled_point(u, v, d, labels(u, v), k);
    }
  }
  return cloud;
}

}  // namespace monoocc
