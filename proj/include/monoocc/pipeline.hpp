#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "monoocc/geometry.hpp"
#include "monoocc/io.hpp"
#include "monoocc/metrics.hpp"
#include "monoocc/model.hpp"
#include "monoocc/patchwise.hpp"
#include "monoocc/pseudolabel.hpp"
#include "monoocc/voxel.hpp"

// End-to-end compositions behind the command-line tool. Every command is a
// plain function so tests can run it in-process; the executable only parses
// flags. Exit codes: 0 success, 1 internal error or divergence, 2 input error.
namespace monoocc::pipeline {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;

/// Exit code for a library error: 2 for bad inputs, 1 otherwise.
int exit_code_for(const Error& e);

/// Flat key=value configuration shared by all commands; command-line flags
/// override whatever is loaded here.
struct PipelineConfig {
  std::optional<std::filesystem::path> intrinsics;
  GridSpec grid = default_grid_spec();
  double min_disparity = kDefaultEpsilonDisparity;
  std::uint32_t min_points = kDefaultMinPoints;
  double train_percentage = 0.5;
  std::size_t epochs = 200;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;

  /// Throws on values outside the owning modules' preconditions.
  void validate() const;
};

/// Keys: intrinsics, grid (XxYxZ), voxel_size, origin (x,y,z), min_disparity,
/// min_points, train_percentage, epochs, learning_rate, seed. Unknown keys are
/// rejected. A grid without origin is laterally centered.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// "256x256x32"
std::array<std::size_t, 3> parse_dims(const std::string& text);
/// "x,y,z"
std::array<double, 3> parse_origin(const std::string& text);
/// Origin that centers X and Y on the camera with z starting at the camera.
std::array<double, 3> centered_origin(const std::array<std::size_t, 3>& dims, double voxel_size);
/// "WxH"
Size2 parse_size(const std::string& text);

// --- project ---------------------------------------------------------------

/// Multiplies disparity by scale, then projects every pixel above min_disparity.
LabeledCloud project_frame(const CameraIntrinsics& k, const DisparityMap& disparity,
                           const LabelMap& labels, double scale, double min_disparity);

struct ProjectOptions {
  std::filesystem::path intrinsics;
  std::filesystem::path disparity;
  std::filesystem::path labels;
  double scale = 1.0;
  double min_disparity = kDefaultEpsilonDisparity;
  std::filesystem::path out;
};

int cmd_project(const ProjectOptions& opt, std::ostream& log);

// --- make-occupancy ----------------------------------------------------------

struct FrameOccupancy {
  std::string frame_id;
  std::size_t points = 0;
  std::size_t dropped = 0;
  std::size_t occupied_voxels = 0;  // before the voting filter
  std::size_t kept_voxels = 0;      // after the voting filter
  std::size_t labeled_voxels = 0;
  SemanticGrid grid;
};

/// project_frame -> voxelize -> voting_filter -> resolve_semantics.
FrameOccupancy build_frame_occupancy(const FrameRecord& frame, const CameraIntrinsics& k,
                                     const GridSpec& spec, std::uint32_t min_points,
                                     double min_disparity);

struct OccupancyOptions {
  std::filesystem::path manifest;
  std::filesystem::path intrinsics;
  GridSpec grid = default_grid_spec();
  std::uint32_t min_points = kDefaultMinPoints;
  double min_disparity = kDefaultEpsilonDisparity;
  std::filesystem::path out_dir;
  int jobs = 1;
};

/// Writes <out_dir>/<frame_id>.sog per frame and <out_dir>/summary.csv in
/// manifest order. Failed frames are logged and skipped; fails only when
/// every frame fails.
int cmd_make_occupancy(const OccupancyOptions& opt, std::ostream& log);

// --- metrics ------------------------------------------------------------------

struct MetricsOptions {
  std::filesystem::path pred;
  std::filesystem::path gt;
  /// PGM; nonzero selects. Default: pixels with finite gt > 0.
  std::optional<std::filesystem::path> mask;
  bool align = false;
  std::optional<std::filesystem::path> pred_labels;
  std::optional<std::filesystem::path> gt_labels;
  std::vector<int> classes;
  std::optional<std::filesystem::path> csv;
};

struct MetricsReport {
  DepthMetrics depth;
  std::optional<SegMetrics> seg;
};

MetricsReport compute_metrics(const MetricsOptions& opt);
/// key=value lines: rmse, a1, a2, a3, then iou_<class> and mean_iou when labels are given.
void print_metrics(std::ostream& out, const MetricsReport& report);
int cmd_metrics(const MetricsOptions& opt, std::ostream& out, std::ostream& log);

// --- boost-merge --------------------------------------------------------------

struct BoostMergeOptions {
  /// Each file's own dimensions are its native resolution.
  std::vector<std::filesystem::path> estimates;
  Size2 target;
  std::filesystem::path out;
};

int cmd_boost_merge(const BoostMergeOptions& opt, std::ostream& log);

// --- patchwise-demo -----------------------------------------------------------

struct DemoOptions {
  double percentage = 0.5;
  std::size_t epochs = 200;
  std::uint64_t seed = 0;
  Variant variant = Variant::V2;
  double learning_rate = 0.05;
  double bce_weight = 1.0;
  /// Regression-only warm start epochs for v3.
  std::size_t pretrain_epochs = 200;
  std::size_t trunk_layers = 1;
  std::size_t hidden_dim = 8;
  /// Full-model training instead of PatchWise.
  bool plain = false;
  bool sequential = false;
  double encoder_percentage = -1.0;
  std::optional<std::filesystem::path> report;
  std::optional<std::filesystem::path> checkpoint;
};

struct DemoResult {
  EvalSummary initial;
  EvalSummary final;
  std::optional<PretrainResult> pretrain;
  std::vector<PatchTrainReport> reports;
  std::uint64_t final_checksum = 0;
};

/// Builds the toy dual-head model, optionally pretrains (v3), and trains on
/// the built-in synthetic dataset.
DemoResult run_patchwise_demo(const DemoOptions& opt);
int cmd_patchwise_demo(const DemoOptions& opt, std::ostream& out, std::ostream& log);

}  // namespace monoocc::pipeline
