#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "monoocc/geometry.hpp"
#include "monoocc/raster.hpp"
#include "monoocc/voxel.hpp"

namespace monoocc {

// Portable Float Map, grayscale ("Pf") only. Rows are stored bottom to top.
// Writes are always little-endian (negative scale); reads accept both.
DisparityMap decode_pfm(std::span<const char> bytes);
std::vector<char> encode_pfm(const DisparityMap& raster);
DisparityMap read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const DisparityMap& raster);

// Binary PGM ("P5"), maxval <= 255, rows top to bottom; 255 means unlabeled.
LabelMap decode_pgm(std::span<const char> bytes);
std::vector<char> encode_pgm(const LabelMap& raster);
LabelMap read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const LabelMap& raster);

// SOG1 occupancy grid: "SOG1", u32 X Y Z, f32 voxel_size, f32 origin[3],
// u32 counts[X*Y*Z], u8 labels[X*Y*Z] (255 = free); little-endian, voxel
// order as GridSpec::linear. Histograms are not stored.
SemanticGrid decode_sog(std::span<const char> bytes);
std::vector<char> encode_sog(const SemanticGrid& grid);
SemanticGrid read_sog(const std::filesystem::path& path);
void write_sog(const std::filesystem::path& path, const SemanticGrid& grid);
/// Resolves semantics first.
void write_sog(const std::filesystem::path& path, const OccupancyGrid& grid);

struct FrameRecord {
  std::string frame_id;
  std::filesystem::path disparity;
  std::filesystem::path labels;
  double scale = 1.0;
};

/// CSV with header frame_id,disparity,labels[,scale]. Relative paths are
/// resolved against the manifest's directory; files are not opened here.
std::vector<FrameRecord> load_manifest(const std::filesystem::path& path);

/// Flat key=value lines; '#' starts a comment, blank lines are skipped.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

/// Keys fx, fy, ox, oy, b (f_x, f_y, o_x, o_y, baseline also accepted).
CameraIntrinsics read_intrinsics(const std::filesystem::path& path);

/// One "x y z label" line per point; unlabeled points carry 255.
void write_point_cloud(std::ostream& out, const LabeledCloud& cloud);
void write_point_cloud(const std::filesystem::path& path, const LabeledCloud& cloud);

}  // namespace monoocc
