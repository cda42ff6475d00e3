#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "monoocc/geometry.hpp"

namespace monoocc {

/// Axis-aligned voxel lattice. Voxel (i, j, k) covers
/// [origin + (i, j, k) * voxel_size, origin + (i+1, j+1, k+1) * voxel_size).
struct GridSpec {
  std::array<std::size_t, 3> dims{256, 256, 32};
  double voxel_size = 0.5;
  std::array<double, 3> origin{-64.0, -64.0, 0.0};

  void validate() const;
  std::size_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }
  /// i fastest: (k * Y + j) * X + i.
  std::size_t linear(std::size_t i, std::size_t j, std::size_t k) const {
    return (k * dims[1] + j) * dims[0] + i;
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// 256 x 256 x 32 voxels of 0.5 m, laterally centered on the camera, z forward
/// from the camera center.
GridSpec default_grid_spec();

/// Default voting threshold: voxels with fewer points are dropped.
inline constexpr std::uint32_t kDefaultMinPoints = 10;

struct VoxelIndex {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;

  friend bool operator==(const VoxelIndex&, const VoxelIndex&) = default;
};

std::optional<VoxelIndex> voxel_index(const Point3& p, const GridSpec& spec);

/// Per-voxel label counts, kept sorted by class id.
class LabelHistogram {
 public:
  void add(ClassId label, std::uint32_t n = 1);
  void merge(const LabelHistogram& other);
  std::uint32_t total() const;
  bool empty() const { return entries_.empty(); }
  std::uint32_t count(ClassId label) const;
  const std::vector<std::pair<ClassId, std::uint32_t>>& entries() const { return entries_; }

  friend bool operator==(const LabelHistogram&, const LabelHistogram&) = default;

 private:
  std::vector<std::pair<ClassId, std::uint32_t>> entries_;
};

struct OccupancyGrid {
  GridSpec spec;
  std::vector<std::uint32_t> counts;
  /// Sparse: only voxels that received at least one labeled point.
  std::unordered_map<std::size_t, LabelHistogram> histograms;

  OccupancyGrid() = default;
  explicit OccupancyGrid(const GridSpec& s) : spec(s), counts(s.voxel_count(), 0) {}

  std::uint64_t total_points() const;
  std::size_t occupied_voxels() const;

  friend bool operator==(const OccupancyGrid&, const OccupancyGrid&) = default;
};

struct VoxelizeResult {
  OccupancyGrid grid;
  std::size_t dropped = 0;
};

/// Accumulates points into voxels; out-of-grid points are counted in `dropped`.
/// Shards the cloud over OpenMP threads and merges partial grids additively.
VoxelizeResult voxelize(const LabeledCloud& cloud, const GridSpec& spec);

namespace serial {
VoxelizeResult voxelize(const LabeledCloud& cloud, const GridSpec& spec);
}  // namespace serial

/// Zeroes every voxel with fewer than min_points points.
OccupancyGrid voting_filter(OccupancyGrid grid, std::uint32_t min_points = kDefaultMinPoints);

inline constexpr ClassId kFree = 255;

struct SemanticGrid {
  GridSpec spec;
  std::vector<std::uint32_t> counts;
  /// kFree where the voxel is empty or carries no labeled point.
  std::vector<ClassId> labels;

  friend bool operator==(const SemanticGrid&, const SemanticGrid&) = default;
};

/// Majority label per voxel, ties to the lowest class id.
SemanticGrid resolve_semantics(const OccupancyGrid& grid);

/// IoU of the voxel sets labeled `label` in a and b; 1 when both are empty.
double grid_iou(const SemanticGrid& a, const SemanticGrid& b, ClassId label);

}  // namespace monoocc
