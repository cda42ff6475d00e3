#include "monoocc/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace monoocc {

void GridSpec::validate() const {
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1) {
    throw Error(ErrorCode::InvalidGridSpec, "grid dimensions must be >= 1");
  }
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) {
    throw Error(ErrorCode::InvalidGridSpec, "voxel size must be positive");
  }
  for (double o : origin) {
    if (!std::isfinite(o)) throw Error(ErrorCode::InvalidGridSpec, "origin must be finite");
  }
}

GridSpec default_grid_spec() {
  GridSpec spec;
  spec.dims = {256, 256, 32};
  spec.voxel_size = 0.5;
  spec.origin = {-0.5 * 256 * 0.5, -0.5 * 256 * 0.5, 0.0};
  return spec;
}

std::optional<VoxelIndex> voxel_index(const Point3& p, const GridSpec& spec) {
  const std::array<double, 3> xyz{p.x, p.y, p.z};
  std::array<std::size_t, 3> idx{};
  for (int a = 0; a < 3; ++a) {
    const double cell = std::floor((xyz[a] - spec.origin[a]) / spec.voxel_size);
    // Also rejects NaN.
    if (!(cell >= 0.0) || !(cell < static_cast<double>(spec.dims[a]))) return std::nullopt;
    idx[a] = static_cast<std::size_t>(cell);
  }
  return VoxelIndex{idx[0], idx[1], idx[2]};
}

void LabelHistogram::add(ClassId label, std::uint32_t n) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), label,
                             [](const auto& e, ClassId c) { return e.first < c; });
  if (it != entries_.end() && it->first == label) {
    it->second += n;
  } else {
    entries_.insert(it, {label, n});
  }
}

void LabelHistogram::merge(const LabelHistogram& other) {
  for (const auto& [label, n] : other.entries_) add(label, n);
}

std::uint32_t LabelHistogram::total() const {
  std::uint32_t sum = 0;
  for (const auto& e : entries_) sum += e.second;
  return sum;
}

std::uint32_t LabelHistogram::count(ClassId label) const {
  for (const auto& e : entries_) {
    if (e.first == label) return e.second;
  }
  return 0;
}

std::uint64_t OccupancyGrid::total_points() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::size_t OccupancyGrid::occupied_voxels() const {
  return static_cast<std::size_t>(
      std::count_if(counts.begin(), counts.end(), [](std::uint32_t c) { return c > 0; }));
}

namespace serial {

VoxelizeResult voxelize(const LabeledCloud& cloud, const GridSpec& spec) {
  spec.validate();
  VoxelizeResult out{OccupancyGrid(spec), 0};
  for (const Point3& p : cloud.points) {
    const auto idx = voxel_index(p, spec);
    if (!idx) {
      ++out.dropped;
      continue;
    }
    const std::size_t lin = spec.linear(idx->i, idx->j, idx->k);
    ++out.grid.counts[lin];
    if (p.label) out.grid.histograms[lin].add(*p.label);
  }
  return out;
}

}  // namespace serial

VoxelizeResult voxelize(const LabeledCloud& cloud, const GridSpec& spec) {
  spec.validate();
  int shards = 1;
#ifdef _OPENMP
  shards = omp_get_max_threads();
#endif
  // Small clouds are not worth a dense partial grid per thread.
  if (shards <= 1 || cloud.size() < 4096) return serial::voxelize(cloud, spec);

  std::vector<VoxelizeResult> partial(static_cast<std::size_t>(shards));
  const auto n = static_cast<std::ptrdiff_t>(cloud.size());
#pragma omp parallel num_threads(shards)
  {
    int tid = 0;
#ifdef _OPENMP
    tid = omp_get_thread_num();
#endif
    VoxelizeResult& mine = partial[static_cast<std::size_t>(tid)];
    mine.grid = OccupancyGrid(spec);
#pragma omp for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const Point3& p = cloud.points[static_cast<std::size_t>(i)];
      const auto idx = voxel_index(p, spec);
      if (!idx) {
        ++mine.dropped;
        continue;
      }
      const std::size_t lin = spec.linear(idx->i, idx->j, idx->k);
      ++mine.grid.counts[lin];
      if (p.label) mine.grid.histograms[lin].add(*p.label);
    }
  }

  // Additive merge; integer sums make the result independent of sharding.
  VoxelizeResult out{std::move(partial[0].grid), partial[0].dropped};
  const auto voxels = static_cast<std::ptrdiff_t>(spec.voxel_count());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t v = 0; v < voxels; ++v) {
    for (std::size_t s = 1; s < partial.size(); ++s) out.grid.counts[v] += partial[s].grid.counts[v];
  }
  for (std::size_t s = 1; s < partial.size(); ++s) {
    out.dropped += partial[s].dropped;
    for (const auto& [lin, hist] : partial[s].grid.histograms) out.grid.histograms[lin].merge(hist);
  }
  return out;
}

OccupancyGrid voting_filter(OccupancyGrid grid, std::uint32_t min_points) {
  if (min_points == 0) return grid;
  for (std::size_t v = 0; v < grid.counts.size(); ++v) {
    if (grid.counts[v] > 0 && grid.counts[v] < min_points) grid.counts[v] = 0;
  }
  std::erase_if(grid.histograms, [&](const auto& kv) { return grid.counts[kv.first] == 0; });
  return grid;
}

SemanticGrid resolve_semantics(const OccupancyGrid& grid) {
  SemanticGrid out{grid.spec, grid.counts, std::vector<ClassId>(grid.counts.size(), kFree)};
  for (const auto& [lin, hist] : grid.histograms) {
    if (grid.counts[lin] == 0 || hist.empty()) continue;
    // Entries are sorted by id, so a strict > keeps the lowest id on ties.
    ClassId best = hist.entries().front().first;
    std::uint32_t best_n = hist.entries().front().second;
    for (const auto& [label, n] : hist.entries()) {
      if (n > best_n) {
        best = label;
        best_n = n;
      }
    }
    out.labels[lin] = best;
  }
  return out;
}

double grid_iou(const SemanticGrid& a, const SemanticGrid& b, ClassId label) {
  if (!(a.spec == b.spec) || a.labels.size() != b.labels.size()) {
    throw Error(ErrorCode::SpecMismatch, "grids have different specs");
  }
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t v = 0; v < a.labels.size(); ++v) {
    const bool in_a = a.labels[v] == label;
    const bool in_b = b.labels[v] == label;
    inter += in_a && in_b;
    uni += in_a || in_b;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace monoocc
