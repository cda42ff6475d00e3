#include "monoocc/pseudolabel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

#include "monoocc/alignment.hpp"

namespace monoocc {

namespace {

struct Tap {
  std::size_t lo = 0;
  std::size_t hi = 0;
  double frac = 0.0;
};

std::vector<Tap> taps(std::size_t src, std::size_t dst) {
  std::vector<Tap> out(dst);
  const double scale = static_cast<double>(src) / static_cast<double>(dst);
  const double max_pos = static_cast<double>(src - 1);
  for (std::size_t i = 0; i < dst; ++i) {
    const double pos = std::clamp((static_cast<double>(i) + 0.5) * scale - 0.5, 0.0, max_pos);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    out[i] = {lo, std::min(lo + 1, src - 1), pos - static_cast<double>(lo)};
  }
  return out;
}

inline double lerp2(const DisparityMap& r, const Tap& tx, const Tap& ty) {
  const double top = r(tx.lo, ty.lo) + tx.frac * (r(tx.hi, ty.lo) - r(tx.lo, ty.lo));
  const double bottom = r(tx.lo, ty.hi) + tx.frac * (r(tx.hi, ty.hi) - r(tx.lo, ty.hi));
  return top + ty.frac * (bottom - top);
}

void check_resample(const DisparityMap& r, Size2 target) {
  if (r.width() == 0 || r.height() == 0) throw Error(ErrorCode::EmptyInput, "cannot resample an empty raster");
  if (target.width == 0 || target.height == 0) {
    throw Error(ErrorCode::InvalidArgument, "resample target must be at least 1 x 1");
  }
}

constexpr double kInf = std::numeric_limits<double>::infinity();

// Squared distance transform of one line (Felzenszwalb & Huttenlocher).
void dt_1d(const double* f, double* d, std::size_t n, std::size_t* v, double* z) {
  std::size_t k = 0;
  std::size_t first = n;
  for (std::size_t q = 0; q < n; ++q) {
    if (f[q] < kInf) {
      first = q;
      break;
    }
  }
  if (first == n) {
    std::fill(d, d + n, kInf);
    return;
  }
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  for (std::size_t q = first + 1; q < n; ++q) {
    if (!(f[q] < kInf)) continue;
    const double fq = f[q] + static_cast<double>(q * q);
    double s;
    while (true) {
      const double vk = static_cast<double>(v[k]);
      s = (fq - (f[v[k]] + vk * vk)) / (2.0 * (static_cast<double>(q) - vk));
      if (s <= z[k] && k > 0) {
        --k;
      } else {
        break;
      }
    }
    if (s <= z[k]) {
      // k == 0 and the new parabola dominates everywhere.
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    while (z[k + 1] < static_cast<double>(q)) ++k;
    const double diff = static_cast<double>(q) - static_cast<double>(v[k]);
    d[q] = diff * diff + f[v[k]];
  }
}

}  // namespace

namespace serial {

DisparityMap bilinear_upsample(const DisparityMap& r, Size2 target) {
  check_resample(r, target);
  const auto tx = taps(r.width(), target.width);
  const auto ty = taps(r.height(), target.height);
  DisparityMap out(target.width, target.height);
  for (std::size_t v = 0; v < target.height; ++v) {
    for (std::size_t u = 0; u < target.width; ++u) out(u, v) = lerp2(r, tx[u], ty[v]);
  }
  return out;
}

DisparityMap distance_to_edges(const Mask& edges) {
  const std::size_t w = edges.width();
  const std::size_t h = edges.height();
  DisparityMap out(w, h, kInf);
  std::vector<std::pair<std::size_t, std::size_t>> points;
  for (std::size_t v = 0; v < h; ++v) {
    for (std::size_t u = 0; u < w; ++u) {
      if (edges(u, v)) points.emplace_back(u, v);
    }
  }
  for (std::size_t v = 0; v < h; ++v) {
    for (std::size_t u = 0; u < w; ++u) {
      double best = kInf;
      for (const auto& [pu, pv] : points) {
        const double du = static_cast<double>(u) - static_cast<double>(pu);
        const double dv = static_cast<double>(v) - static_cast<double>(pv);
        best = std::min(best, du * du + dv * dv);
      }
      out(u, v) = std::sqrt(best);
    }
  }
  return out;
}

}  // namespace serial

DisparityMap bilinear_upsample(const DisparityMap& r, Size2 target) {
  check_resample(r, target);
  const auto tx = taps(r.width(), target.width);
  const auto ty = taps(r.height(), target.height);
  DisparityMap out(target.width, target.height);
  const auto rows = static_cast<std::ptrdiff_t>(target.height);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t v = 0; v < rows; ++v) {
    const Tap& y = ty[static_cast<std::size_t>(v)];
    for (std::size_t u = 0; u < target.width; ++u) out(u, static_cast<std::size_t>(v)) = lerp2(r, tx[u], y);
  }
  return out;
}

DisparityMap distance_to_edges(const Mask& edges) {
  const std::size_t w = edges.width();
  const std::size_t h = edges.height();
  DisparityMap sq(w, h);
  for (std::size_t i = 0; i < edges.count(); ++i) sq[i] = edges[i] ? 0.0 : kInf;

  // Separable: columns, then rows, each line independent.
  const auto cols = static_cast<std::ptrdiff_t>(w);
#pragma omp parallel
  {
    const std::size_t n = std::max(w, h);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<std::size_t> v(n);
#pragma omp for schedule(static)
    for (std::ptrdiff_t u = 0; u < cols; ++u) {
      const auto uu = static_cast<std::size_t>(u);
      for (std::size_t y = 0; y < h; ++y) f[y] = sq(uu, y);
      dt_1d(f.data(), d.data(), h, v.data(), z.data());
      for (std::size_t y = 0; y < h; ++y) sq(uu, y) = d[y];
    }
#pragma omp for schedule(static)
    for (std::ptrdiff_t y = 0; y < static_cast<std::ptrdiff_t>(h); ++y) {
      const auto yy = static_cast<std::size_t>(y);
      for (std::size_t x = 0; x < w; ++x) f[x] = sq(x, yy);
      dt_1d(f.data(), d.data(), w, v.data(), z.data());
      for (std::size_t x = 0; x < w; ++x) sq(x, yy) = std::sqrt(d[x]);
    }
  }
  return sq;
}

FusionResult fuse_multi_resolution(const std::vector<ResolutionEstimate>& estimates, Size2 target) {
  if (estimates.empty()) throw Error(ErrorCode::EmptyInput, "no disparity estimates to fuse");

  std::size_t base = 0;
  for (std::size_t i = 1; i < estimates.size(); ++i) {
    if (estimates[i].native_resolution.area() < estimates[base].native_resolution.area()) base = i;
  }

  FusionResult result;
  const DisparityMap base_map = bilinear_upsample(estimates[base].disparity, target);
  const Mask all = full_mask(target);

  DisparityMap acc(target.width, target.height, 0.0);
  double total_weight = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    DisparityMap aligned = i == base ? base_map : bilinear_upsample(estimates[i].disparity, target);
    if (i != base) {
      try {
        aligned = apply_scale_shift(aligned, fit_scale_shift(aligned, base_map, all));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateFit && e.code() != ErrorCode::TooFewPixels) throw;
        std::cerr << "warning: skipping estimate " << i << ": " << e.what() << '\n';
        result.skipped.push_back(i);
        continue;
      }
    }
    const auto weight = static_cast<double>(estimates[i].native_resolution.area());
    for (std::size_t p = 0; p < acc.count(); ++p) acc[p] += weight * aligned[p];
    total_weight += weight;
  }
  for (std::size_t p = 0; p < acc.count(); ++p) acc[p] /= total_weight;
  result.fused = std::move(acc);
  return result;
}

Mask edge_map(const DisparityMap& image) {
  const std::size_t w = image.width();
  const std::size_t h = image.height();
  DisparityMap mag(w, h);
  for (std::size_t v = 0; v < h; ++v) {
    for (std::size_t u = 0; u < w; ++u) {
      const double gx = w < 2 ? 0.0
                        : u + 1 < w ? image(u + 1, v) - image(u, v)
                                    : image(u, v) - image(u - 1, v);
      const double gy = h < 2 ? 0.0
                        : v + 1 < h ? image(u, v + 1) - image(u, v)
                                    : image(u, v) - image(u, v - 1);
      mag(u, v) = std::hypot(gx, gy);
    }
  }

  Mask edges(w, h, 0);
  if (mag.empty()) return edges;
  const auto [lo_it, hi_it] = std::minmax_element(mag.values().begin(), mag.values().end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (hi == lo) {
    if (hi > 0.0) std::fill(edges.values().begin(), edges.values().end(), 1);
    return edges;
  }

  // Otsu over 256 bins spanning [lo, hi].
  constexpr std::size_t kBins = 256;
  std::array<double, kBins> hist{};
  std::vector<std::size_t> bin_of(mag.count());
  for (std::size_t i = 0; i < mag.count(); ++i) {
    const double t = (mag[i] - lo) / (hi - lo);
    bin_of[i] = std::min(kBins - 1, static_cast<std::size_t>(t * kBins));
    hist[bin_of[i]] += 1.0;
  }
  const double total = static_cast<double>(mag.count());
  double sum_all = 0.0;
  for (std::size_t b = 0; b < kBins; ++b) sum_all += static_cast<double>(b) * hist[b];
  double w0 = 0.0;
  double sum0 = 0.0;
  double best = -1.0;
  std::size_t threshold = 0;
  for (std::size_t b = 0; b + 1 < kBins; ++b) {
    w0 += hist[b];
    sum0 += static_cast<double>(b) * hist[b];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double m0 = sum0 / w0;
    const double m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      threshold = b;
    }
  }
  for (std::size_t i = 0; i < mag.count(); ++i) edges[i] = bin_of[i] > threshold ? 1 : 0;
  return edges;
}

double far_pixel_fraction(const DisparityMap& image, Size2 candidate) {
  const DisparityMap resampled = bilinear_upsample(image, candidate);
  const DisparityMap dist = distance_to_edges(edge_map(resampled));
  const double radius = static_cast<double>(std::min(candidate.width, candidate.height)) / 10.0;
  const auto far = std::count_if(dist.values().begin(), dist.values().end(),
                                 [radius](double d) { return d > radius; });
  return static_cast<double>(far) / static_cast<double>(candidate.area());
}

Size2 select_adaptive_resolution(const DisparityMap& image, double x_percent,
                                 const std::vector<Size2>& candidates, std::optional<Size2> cap) {
  if (!(x_percent > 0.0 && x_percent < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "x_percent must lie in (0, 1)");
  }
  std::vector<Size2> allowed;
  for (const Size2& c : candidates) {
    if (!cap || (c.width <= cap->width && c.height <= cap->height)) allowed.push_back(c);
  }
  if (allowed.empty()) throw Error(ErrorCode::NoCandidates, "no candidate resolution within the cap");

  for (std::size_t i = allowed.size(); i-- > 0;) {
    if (far_pixel_fraction(image, allowed[i]) <= x_percent) return allowed[i];
  }
  return allowed.front();
}

UncertaintyMap binary_uncertainty(const DisparityMap& prob) {
  UncertaintyMap out{DisparityMap(prob.width(), prob.height())};
  for (std::size_t i = 0; i < prob.count(); ++i) {
    const double p = prob[i];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::OutOfRange, "probability " + std::to_string(p) + " outside [0, 1]");
    }
    out.values[i] = 1.0 - 2.0 * std::abs(p - 0.5);
  }
  return out;
}

std::vector<Pixel> select_uncertain_points(const UncertaintyMap& u, std::size_t n) {
  const DisparityMap& vals = u.values;
  std::vector<std::size_t> order(vals.count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
  order.resize(std::min(n, order.size()));
  std::vector<Pixel> out;
  out.reserve(order.size());
  for (std::size_t i : order) out.push_back({i % vals.width(), i / vals.width()});
  return out;
}

LabelMap refine_with_hook(const LabelMap& coarse, const std::vector<Pixel>& points,
                          const PointRefiner& refiner, std::span<const DisparityMap> features) {
  for (const DisparityMap& f : features) require_same_shape(coarse, f, "feature map differs in shape");
  LabelMap out = coarse;
  std::vector<double> feature(features.size());
  for (const Pixel& p : points) {
    if (p.u >= coarse.width() || p.v >= coarse.height()) {
      throw Error(ErrorCode::OutOfRange, "refinement point outside the label map");
    }
    for (std::size_t k = 0; k < features.size(); ++k) feature[k] = features[k](p.u, p.v);
    try {
      out(p.u, p.v) = refiner(p, feature);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::CallbackFailure, "refiner failed at pixel (" + std::to_string(p.u) +
                                                  ", " + std::to_string(p.v) + "): " + e.what());
    }
  }
  return out;
}

}  // namespace monoocc
