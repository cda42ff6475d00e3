#pragma once

#include <map>
#include <vector>

#include "monoocc/alignment.hpp"
#include "monoocc/raster.hpp"

namespace monoocc {

struct DepthMetrics {
  double rmse = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;
  double a3 = 0.0;
};

struct SegMetrics {
  /// Only classes present in pred or gt.
  std::map<ClassId, double> per_class_iou;
  /// Mean over per_class_iou; NaN when no requested class is present.
  double mean_iou = 0.0;
};

/// Base of the delta thresholds: a_k counts ratios below 1.25^k.
inline constexpr double kDeltaBase = 1.25;

double rmse(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask);

/// Fraction of masked pixels with max(gt/pred, pred/gt) < 1.25^power, power in {1,2,3}.
double threshold_accuracy(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask,
                          int power);

DepthMetrics depth_metrics(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask);

/// Per-class IoU. An empty class list means every id present except kUnlabeled.
SegMetrics seg_iou(const LabelMap& pred, const LabelMap& gt, const std::vector<ClassId>& classes);

/// depth_metrics after least-squares scale/shift alignment of pred onto gt.
DepthMetrics evaluate_depth_aligned(const DisparityMap& pred, const DisparityMap& gt,
                                    const Mask& mask);

namespace serial {
double rmse(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask);
double threshold_accuracy(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask,
                          int power);
SegMetrics seg_iou(const LabelMap& pred, const LabelMap& gt, const std::vector<ClassId>& classes);
}  // namespace serial

}  // namespace monoocc
