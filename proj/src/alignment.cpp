#include "monoocc/alignment.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace monoocc {

ScaleShift fit_scale_shift(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask) {
  require_same_shape(pred, gt, "prediction and ground truth differ in shape");
  require_same_shape(pred, mask, "mask differs in shape");

  std::size_t n = 0;
  double sum_p = 0.0;
  double sum_g = 0.0;
  for (std::size_t i = 0; i < pred.count(); ++i) {
    if (!mask[i]) continue;
    ++n;
    sum_p += pred[i];
    sum_g += gt[i];
  }
  if (n < 2) {
    throw Error(ErrorCode::TooFewPixels, "need at least 2 masked pixels, got " + std::to_string(n));
  }

  // Centered form of the 2x2 normal equations.
  const double mean_p = sum_p / static_cast<double>(n);
  const double mean_g = sum_g / static_cast<double>(n);
  double var = 0.0;
  double cov = 0.0;
  for (std::size_t i = 0; i < pred.count(); ++i) {
    if (!mask[i]) continue;
    const double dp = pred[i] - mean_p;
    var += dp * dp;
    cov += dp * (gt[i] - mean_g);
  }
  if (var / static_cast<double>(n) < kDegenerateVariance) {
    throw Error(ErrorCode::DegenerateFit, "masked prediction has (near) zero variance");
  }
  const double s = cov / var;
  return {s, mean_g - s * mean_p};
}

DisparityMap apply_scale_shift(const DisparityMap& pred, ScaleShift ss) {
  DisparityMap out(pred.width(), pred.height());
  for (std::size_t i = 0; i < pred.count(); ++i) out[i] = ss.scale * pred[i] + ss.shift;
  return out;
}

double ssi_loss(const DisparityMap& pred, const DisparityMap& gt, const Mask& mask) {
  const ScaleShift ss = fit_scale_shift(pred, gt, mask);
  std::size_t n = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.count(); ++i) {
    if (!mask[i]) continue;
    const double r = ss.scale * pred[i] + ss.shift - gt[i];
    sum += r * r;
    ++n;
  }
  return sum / static_cast<double>(n);
}

double estimate_frame_scale(const DisparityMap& pred, const DisparityMap& reference,
                            const Mask& mask) {
  require_same_shape(pred, reference, "prediction and reference differ in shape");
  require_same_shape(pred, mask, "mask differs in shape");
  std::vector<double> ratios;
  for (std::size_t i = 0; i < pred.count(); ++i) {
    if (mask[i] && pred[i] > 0.0 && reference[i] > 0.0) ratios.push_back(reference[i] / pred[i]);
  }
  if (ratios.empty()) throw Error(ErrorCode::NoValidPixels, "no masked pixel with positive values");

  const std::size_t mid = ratios.size() / 2;
  std::nth_element(ratios.begin(), ratios.begin() + mid, ratios.end());
  const double upper = ratios[mid];
  if (ratios.size() % 2 == 1) return upper;
  const double lower = *std::max_element(ratios.begin(), ratios.begin() + mid);
  return 0.5 * (lower + upper);
}

}  // namespace monoocc
