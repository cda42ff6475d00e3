#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include "monoocc/error.hpp"

namespace monoocc {

using ClassId = std::uint8_t;

/// Class id reserved for pixels without a semantic label (PGM value 255).
inline constexpr ClassId kUnlabeled = 255;

struct Size2 {
  std::size_t width = 0;
  std::size_t height = 0;

  std::size_t area() const { return width * height; }
  friend bool operator==(const Size2&, const Size2&) = default;
};

/// Row-major H x W image-plane grid. Index (u, v) is (column, row).
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(std::size_t width, std::size_t height, T fill = T{})
      : width_(width), height_(height), data_(width * height, fill) {}
  Raster(std::size_t width, std::size_t height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != width_ * height_) {
      throw Error(ErrorCode::DimensionMismatch, "raster data does not match its dimensions");
    }
  }

  /// Single-row raster, handy for 1-D fixtures.
  static Raster row(std::initializer_list<T> values) {
    return Raster(values.size(), values.size() == 0 ? 0 : 1, std::vector<T>(values));
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  Size2 size() const { return {width_, height_}; }
  std::size_t count() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t u, std::size_t v) { return data_[v * width_ + u]; }
  const T& operator()(std::size_t u, std::size_t v) const { return data_[v * width_ + u]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> values() { return data_; }
  std::span<const T> values() const { return data_; }

  template <typename U>
  bool same_shape(const Raster<U>& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<T> data_;
};

using DisparityMap = Raster<double>;
using LabelMap = Raster<ClassId>;
/// Nonzero entries are selected.
using Mask = Raster<std::uint8_t>;

inline Mask full_mask(Size2 size) { return Mask(size.width, size.height, 1); }

template <typename A, typename B>
void require_same_shape(const Raster<A>& a, const Raster<B>& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorCode::DimensionMismatch, what);
  }
}

}  // namespace monoocc
