// Command-line front end. All work happens in monoocc::pipeline; this file
// only maps flags onto option structs.

#include <CLI11.hpp>

#include <cstring>
#include <iostream>
#include <string>

#include "monoocc/pipeline.hpp"

namespace pl = monoocc::pipeline;

namespace {

// --config must be known before flags are declared, because its values
// become the flag defaults.
std::optional<std::string> find_config(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--config") == 0 && i + 1 < argc) return argv[i + 1];
    if (std::strncmp(argv[i], "--config=", 9) == 0) return std::string(argv[i] + 9);
  }
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  pl::PipelineConfig cfg;
  std::string config_path;
  try {
    if (auto path = find_config(argc, argv)) {
      config_path = *path;
      cfg = pl::load_pipeline_config(*path);
    }
  } catch (const monoocc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pl::exit_code_for(e);
  }

  CLI::App app{"Monocular semantic occupancy toolkit"};
  app.require_subcommand(1);
  app.add_option("--config", config_path, "flat key=value defaults (flags override)");

  // project
  pl::ProjectOptions proj;
  proj.min_disparity = cfg.min_disparity;
  if (cfg.intrinsics) proj.intrinsics = *cfg.intrinsics;
  auto* project = app.add_subcommand("project", "project a disparity + label frame to an ASCII point cloud");
  project->add_option("--intrinsics", proj.intrinsics, "key=value intrinsics file")->required(!cfg.intrinsics);
  project->add_option("--disparity", proj.disparity, "PFM disparity")->required();
  project->add_option("--labels", proj.labels, "PGM labels")->required();
  project->add_option("--scale", proj.scale, "multiplies disparity before projection");
  project->add_option("--min-disparity", proj.min_disparity);
  project->add_option("--out", proj.out, "x y z label per line")->required();

  // make-occupancy
  pl::OccupancyOptions occ;
  occ.grid = cfg.grid;
  occ.min_points = cfg.min_points;
  occ.min_disparity = cfg.min_disparity;
  if (cfg.intrinsics) occ.intrinsics = *cfg.intrinsics;
  std::string grid_text;
  std::string origin_text;
  double voxel_size = cfg.grid.voxel_size;
  auto* make_occ = app.add_subcommand("make-occupancy", "build SOG1 occupancy grids for a manifest");
  make_occ->add_option("--manifest", occ.manifest, "CSV frame_id,disparity,labels[,scale]")->required();
  make_occ->add_option("--intrinsics", occ.intrinsics)->required(!cfg.intrinsics);
  make_occ->add_option("--grid", grid_text, "voxel counts XxYxZ (default 256x256x32)");
  make_occ->add_option("--voxel-size", voxel_size, "meters (default 0.5)");
  make_occ->add_option("--origin", origin_text, "x,y,z of voxel (0,0,0); default centers X and Y");
  make_occ->add_option("--min-points", occ.min_points, "voting threshold (default 10)");
  make_occ->add_option("--min-disparity", occ.min_disparity);
  make_occ->add_option("--out-dir", occ.out_dir)->required();
  make_occ->add_option("--jobs", occ.jobs, "frames processed in parallel");

  // metrics
  pl::MetricsOptions met;
  std::string mask_path;
  std::string pred_labels;
  std::string gt_labels;
  std::string csv_path;
  auto* metrics = app.add_subcommand("metrics", "depth and segmentation metrics");
  metrics->add_option("--pred", met.pred, "PFM prediction")->required();
  metrics->add_option("--gt", met.gt, "PFM ground truth")->required();
  metrics->add_option("--mask", mask_path, "PGM, nonzero = valid (default gt > 0)");
  metrics->add_flag("--align", met.align, "least-squares scale/shift alignment first");
  metrics->add_option("--pred-labels", pred_labels, "PGM predicted classes");
  metrics->add_option("--gt-labels", gt_labels, "PGM ground-truth classes");
  metrics->add_option("--classes", met.classes, "class ids for IoU (default: all present)");
  metrics->add_option("--csv", csv_path, "append one CSV row");

  // boost-merge
  pl::BoostMergeOptions boost;
  std::string target_text;
  auto* merge = app.add_subcommand("boost-merge", "fuse multi-resolution disparity estimates");
  merge->add_option("--estimates", boost.estimates, "PFM files")->required();
  merge->add_option("--target-size", target_text, "WxH")->required();
  merge->add_option("--out", boost.out, "fused PFM")->required();

  // patchwise-demo
  pl::DemoOptions demo;
  demo.percentage = cfg.train_percentage;
  demo.epochs = cfg.epochs;
  demo.learning_rate = cfg.learning_rate;
  demo.seed = cfg.seed;
  std::string variant = "v2";
  std::string report_path;
  std::string checkpoint_path;
  auto* pw = app.add_subcommand("patchwise-demo", "train the toy dual-head model with PatchWise");
  pw->add_option("--percentage", demo.percentage, "slots trained per patch, fraction in (0, 1]");
  pw->add_option("--epochs", demo.epochs);
  pw->add_option("--seed", demo.seed);
  pw->add_option("--variant", variant, "v1 | v2 | v3")->check(CLI::IsMember({"v1", "v2", "v3"}));
  pw->add_option("--lr", demo.learning_rate);
  pw->add_option("--bce-weight", demo.bce_weight);
  pw->add_option("--pretrain-epochs", demo.pretrain_epochs, "v3 regression warm start");
  pw->add_option("--trunk-layers", demo.trunk_layers);
  pw->add_option("--hidden", demo.hidden_dim);
  pw->add_option("--encoder-percentage", demo.encoder_percentage,
                 "restrict patches to this leading fraction of trunk slots");
  pw->add_flag("--plain", demo.plain, "ordinary full-model training");
  pw->add_flag("--sequential", demo.sequential, "sequential block updates (comparison only)");
  pw->add_option("--report", report_path, "PatchTrainReport CSV");
  pw->add_option("--checkpoint", checkpoint_path, "SDPT checkpoint of the final weights");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pl::kExitInput;
  }

  try {
    if (*project) return pl::cmd_project(proj, std::cerr);
    if (*make_occ) {
      if (!grid_text.empty()) occ.grid.dims = pl::parse_dims(grid_text);
      occ.grid.voxel_size = voxel_size;
      const bool custom_geometry = !grid_text.empty() || make_occ->count("--voxel-size") > 0;
      if (!origin_text.empty()) {
        occ.grid.origin = pl::parse_origin(origin_text);
      } else if (custom_geometry) {
        occ.grid.origin = pl::centered_origin(occ.grid.dims, occ.grid.voxel_size);
      }
      return pl::cmd_make_occupancy(occ, std::cerr);
    }
    if (*metrics) {
      if (!mask_path.empty()) met.mask = mask_path;
      if (!pred_labels.empty()) met.pred_labels = pred_labels;
      if (!gt_labels.empty()) met.gt_labels = gt_labels;
      if (!csv_path.empty()) met.csv = csv_path;
      return pl::cmd_metrics(met, std::cout, std::cerr);
    }
    if (*merge) {
      boost.target = pl::parse_size(target_text);
      return pl::cmd_boost_merge(boost, std::cerr);
    }
    if (*pw) {
      demo.variant = monoocc::parse_variant(variant);
      if (!report_path.empty()) demo.report = report_path;
      if (!checkpoint_path.empty()) demo.checkpoint = checkpoint_path;
      return pl::cmd_patchwise_demo(demo, std::cout, std::cerr);
    }
  } catch (const monoocc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return pl::exit_code_for(e);
  }
  return pl::kExitInternal;
}
