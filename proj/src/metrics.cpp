#include "monoocc/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "monoocc/parallel.hpp"

namespace monoocc {

namespace {

std::size_t checked_mask_count(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask) {
  require_same_shape(pred, gt, "prediction and ground truth differ in shape");
  require_same_shape(pred, mask, "mask differs in shape");
  std::size_t n = 0;
  for (auto m : mask.values()) n += m != 0;
  if (n == 0) throw Error(ErrorCode::EmptyMask, "mask selects no pixel");
  return n;
}

double delta_limit(int power) {
  if (power < 1 || power > 3) throw Error(ErrorCode::InvalidArgument, "delta power must be 1, 2 or 3");
  return std::pow(kDeltaBase, power);
}

void require_positive(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask) {
  for (std::size_t i = 0; i < pred.count(); ++i) {
    if (mask[i] && !(pred[i] > 0.0 && gt[i] > 0.0)) {
      throw Error(ErrorCode::NonPositiveValue, "delta accuracy needs positive pred and gt");
    }
  }
}

inline double delta_ratio(double p, double g) { return std::max(g / p, p / g); }

std::vector<ClassId> classes_present(const LabelMap& pred, const LabelMap& gt) {
  std::array<bool, 256> seen{};
  for (ClassId c : pred.values()) seen[c] = true;
  for (ClassId c : gt.values()) seen[c] = true;
  std::vector<ClassId> out;
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (seen[c] && c != kUnlabeled) out.push_back(static_cast<ClassId>(c));
  }
  return out;
}

SegMetrics summarize(const std::array<std::size_t, 256>& inter,
                     const std::array<std::size_t, 256>& uni, const std::vector<ClassId>& classes) {
  SegMetrics out;
  double sum = 0.0;
  for (ClassId c : classes) {
    if (uni[c] == 0) continue;
    const double iou = static_cast<double>(inter[c]) / static_cast<double>(uni[c]);
    out.per_class_iou[c] = iou;
    sum += iou;
  }
  out.mean_iou = out.per_class_iou.empty()
                     ? std::numeric_limits<double>::quiet_NaN()
                     : sum / static_cast<double>(out.per_class_iou.size());
  return out;
}

}  // namespace

namespace serial {

double rmse(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask) {
  const std::size_t n = checked_mask_count(pred, gt, mask);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.count(); ++i) {
    if (!mask[i]) continue;
    const double e = pred[i] - gt[i];
    sum += e * e;
  }
  return std::sqrt(sum / static_cast<double>(n));
}

double threshold_accuracy(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask,
                          int power) {
  const std::size_t n = checked_mask_count(pred, gt, mask);
  const double limit = delta_limit(power);
  require_positive(pred, gt, mask);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.count(); ++i) {
    if (mask[i] && delta_ratio(pred[i], gt[i]) < limit) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

SegMetrics seg_iou(const LabelMap& pred, const LabelMap& gt, const std::vector<ClassId>& classes) {
  require_same_shape(pred, gt, "label rasters differ in shape");
  std::array<std::size_t, 256> inter{};
  std::array<std::size_t, 256> uni{};
  for (std::size_t i = 0; i < pred.count(); ++i) {
    const ClassId p = pred[i];
    const ClassId g = gt[i];
    if (p == g) {
      ++inter[p];
      ++uni[p];
    } else {
      ++uni[p];
      ++uni[g];
    }
  }
  return summarize(inter, uni, classes.empty() ? classes_present(pred, gt) : classes);
}

}  // namespace serial

double rmse(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask) {
  const std::size_t n = checked_mask_count(pred, gt, mask);
  const double sum = parallel::blocked_sum(pred.count(), [&](std::size_t i) {
    const double e = pred[i] - gt[i];
    return mask[i] ? e * e : 0.0;
  });
  return std::sqrt(sum / static_cast<double>(n));
}

double threshold_accuracy(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask,
                          int power) {
  const std::size_t n = checked_mask_count(pred, gt, mask);
  const double limit = delta_limit(power);
  require_positive(pred, gt, mask);
  const std::size_t hits = parallel::count_if(
      pred.count(), [&](std::size_t i) { return mask[i] && delta_ratio(pred[i], gt[i]) < limit; });
  return static_cast<double>(hits) / static_cast<double>(n);
}

DepthMetrics depth_metrics(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask) {
  return {rmse(pred, gt, mask), threshold_accuracy(pred, gt, mask, 1),
          threshold_accuracy(pred, gt, mask, 2), threshold_accuracy(pred, gt, mask, 3)};
}

SegMetrics seg_iou(const LabelMap& pred, const LabelMap& gt, const std::vector<ClassId>& classes) {
  require_same_shape(pred, gt, "label rasters differ in shape");
  std::array<std::size_t, 256> inter{};
  std::array<std::size_t, 256> uni{};
  const auto n = static_cast<std::ptrdiff_t>(pred.count());
  std::size_t* inter_p = inter.data();
  std::size_t* uni_p = uni.data();
#pragma omp parallel for schedule(static) reduction(+ : inter_p[:256], uni_p[:256])
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const ClassId p = pred[static_cast<std::size_t>(i)];
    const ClassId g = gt[static_cast<std::size_t>(i)];
    ++uni_p[p];
    if (p == g) {
      ++inter_p[p];
    } else {
      ++uni_p[g];
    }
  }
  return summarize(inter, uni, classes.empty() ? classes_present(pred, gt) : classes);
}

DepthMetrics evaluate_depth_aligned(const DisparityMap& pred, const DisparityMap& gt,
                                    const Mask& mask) {
  const ScaleShift ss = fit_scale_shift(pred, gt, mask);
  return depth_metrics(apply_scale_shift(pred, ss), gt, mask);
}

}  // namespace monoocc
