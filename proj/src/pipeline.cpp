#include "monoocc/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "monoocc/metrics.hpp"

namespace monoocc::pipeline {

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::DimensionMismatch:
    case ErrorCode::InvalidIntrinsics:
    case ErrorCode::InvalidGridSpec:
    case ErrorCode::SpecMismatch:
    case ErrorCode::EmptyMask:
    case ErrorCode::NonPositiveValue:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidPercentage:
    case ErrorCode::DegenerateFit:
    case ErrorCode::TooFewPixels:
    case ErrorCode::NoValidPixels:
    case ErrorCode::EmptyInput:
    case ErrorCode::NoCandidates:
    case ErrorCode::OutOfRange:
    case ErrorCode::MalformedHeader:
    case ErrorCode::TruncatedData:
    case ErrorCode::MaxvalUnsupported:
    case ErrorCode::BadMagic:
    case ErrorCode::SizeMismatch:
    case ErrorCode::DuplicateFrameId:
    case ErrorCode::MissingFile:
      return kExitInput;
    default:
      return kExitInternal;
  }
}

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    log << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}

}  // namespace

void PipelineConfig::validate() const {
  grid.validate();
  if (!(min_disparity >= 0.0) || !std::isfinite(min_disparity)) {
    throw Error(ErrorCode::InvalidArgument, "min_disparity must be finite and >= 0");
  }
  if (!(train_percentage > 0.0 && train_percentage <= 1.0)) {
    throw Error(ErrorCode::InvalidPercentage, "train_percentage must lie in (0, 1]");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::InvalidArgument, "learning_rate must be finite and >= 0");
  }
}

std::array<std::size_t, 3> parse_dims(const std::string& text) {
  std::array<std::size_t, 3> dims{};
  char x1 = 0;
  char x2 = 0;
  std::istringstream in(text);
  if (!(in >> dims[0] >> x1 >> dims[1] >> x2 >> dims[2]) || x1 != 'x' || x2 != 'x' ||
      !(in >> std::ws).eof()) {
    throw Error(ErrorCode::InvalidArgument, "grid must look like 256x256x32, got '" + text + "'");
  }
  return dims;
}

std::array<double, 3> parse_origin(const std::string& text) {
  std::array<double, 3> o{};
  char c1 = 0;
  char c2 = 0;
  std::istringstream in(text);
  if (!(in >> o[0] >> c1 >> o[1] >> c2 >> o[2]) || c1 != ',' || c2 != ',' ||
      !(in >> std::ws).eof()) {
    throw Error(ErrorCode::InvalidArgument, "origin must look like x,y,z, got '" + text + "'");
  }
  return o;
}

std::array<double, 3> centered_origin(const std::array<std::size_t, 3>& dims, double voxel_size) {
  return {-0.5 * static_cast<double>(dims[0]) * voxel_size,
          -0.5 * static_cast<double>(dims[1]) * voxel_size, 0.0};
}

Size2 parse_size(const std::string& text) {
  Size2 s;
  char x = 0;
  std::istringstream in(text);
  if (!(in >> s.width >> x >> s.height) || x != 'x' || !(in >> std::ws).eof() || s.area() == 0) {
    throw Error(ErrorCode::InvalidArgument, "size must look like 640x480, got '" + text + "'");
  }
  return s;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  const auto kv = read_key_values(path);
  PipelineConfig cfg;
  bool origin_given = false;
  auto number = [&](const std::string& key, const std::string& value) {
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, path.string() + ": bad value for " + key);
    }
  };
  auto count = [&](const std::string& key, const std::string& value) {
    const double v = number(key, value);
    if (v < 0.0 || v != std::floor(v)) {
      throw Error(ErrorCode::InvalidArgument, path.string() + ": " + key + " must be a non-negative integer");
    }
    return static_cast<std::uint64_t>(v);
  };
  for (const auto& [key, value] : kv) {
    if (key == "intrinsics") {
      const std::filesystem::path p(value);
      cfg.intrinsics = p.is_absolute() ? p : path.parent_path() / p;
    } else if (key == "grid") {
      cfg.grid.dims = parse_dims(value);
    } else if (key == "voxel_size") {
      cfg.grid.voxel_size = number(key, value);
    } else if (key == "origin") {
      cfg.grid.origin = parse_origin(value);
      origin_given = true;
    } else if (key == "min_disparity") {
      cfg.min_disparity = number(key, value);
    } else if (key == "min_points") {
      cfg.min_points = static_cast<std::uint32_t>(count(key, value));
    } else if (key == "train_percentage") {
      cfg.train_percentage = number(key, value);
    } else if (key == "epochs") {
      cfg.epochs = count(key, value);
    } else if (key == "learning_rate") {
      cfg.learning_rate = number(key, value);
    } else if (key == "seed") {
      cfg.seed = count(key, value);
    } else {
      throw Error(ErrorCode::InvalidArgument, path.string() + ": unknown key '" + key + "'");
    }
  }
  if (!origin_given) cfg.grid.origin = centered_origin(cfg.grid.dims, cfg.grid.voxel_size);
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------

LabeledCloud project_frame(const CameraIntrinsics& k, const DisparityMap& disparity,
                           const LabelMap& labels, double scale, double min_disparity) {
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorCode::InvalidArgument, "frame scale must be positive");
  }
  DisparityMap scaled = disparity;
  for (double& d : scaled.values()) d *= scale;
  return project_map(scaled, labels, k, min_disparity);
}

int cmd_project(const ProjectOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    const CameraIntrinsics k = read_intrinsics(opt.intrinsics);
    const DisparityMap disparity = read_pfm(opt.disparity);
    const LabelMap labels = read_pgm(opt.labels);
    const LabeledCloud cloud = project_frame(k, disparity, labels, opt.scale, opt.min_disparity);
    write_point_cloud(opt.out, cloud);
    log << "wrote " << cloud.size() << " points to " << opt.out.string() << '\n';
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

FrameOccupancy build_frame_occupancy(const FrameRecord& frame, const CameraIntrinsics& k,
                                     const GridSpec& spec, std::uint32_t min_points,
                                     double min_disparity) {
  const DisparityMap disparity = read_pfm(frame.disparity);
  const LabelMap labels = read_pgm(frame.labels);
  const LabeledCloud cloud = project_frame(k, disparity, labels, frame.scale, min_disparity);
  VoxelizeResult vox = voxelize(cloud, spec);

  FrameOccupancy out;
  out.frame_id = frame.frame_id;
  out.points = cloud.size();
  out.dropped = vox.dropped;
  out.occupied_voxels = vox.grid.occupied_voxels();
  const OccupancyGrid kept = voting_filter(std::move(vox.grid), min_points);
  out.kept_voxels = kept.occupied_voxels();
  out.grid = resolve_semantics(kept);
  out.labeled_voxels = static_cast<std::size_t>(
      std::count_if(out.grid.labels.begin(), out.grid.labels.end(), [](ClassId c) { return c != kFree; }));
  return out;
}

int cmd_make_occupancy(const OccupancyOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    opt.grid.validate();
    if (opt.jobs < 1) throw Error(ErrorCode::InvalidArgument, "--jobs must be >= 1");
    const CameraIntrinsics k = read_intrinsics(opt.intrinsics);
    const std::vector<FrameRecord> frames = load_manifest(opt.manifest);
    std::filesystem::create_directories(opt.out_dir);

    log << "min_points=" << opt.min_points << ", voxel_size=" << opt.grid.voxel_size << '\n';

    struct Outcome {
      std::optional<FrameOccupancy> result;
      std::string error;
    };
    std::vector<Outcome> outcomes(frames.size());
    const auto n = static_cast<std::ptrdiff_t>(frames.size());
#pragma omp parallel for num_threads(opt.jobs) schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const FrameRecord& frame = frames[static_cast<std::size_t>(i)];
      Outcome& o = outcomes[static_cast<std::size_t>(i)];
      try {
        FrameOccupancy occ = build_frame_occupancy(frame, k, opt.grid, opt.min_points, opt.min_disparity);
        write_sog(opt.out_dir / (frame.frame_id + ".sog"), occ.grid);
        occ.grid = {};
        o.result = std::move(occ);
      } catch (const std::exception& e) {
        o.error = e.what();
      }
    }

    std::ofstream summary(opt.out_dir / "summary.csv", std::ios::trunc);
    if (!summary) throw Error(ErrorCode::IoFailure, "cannot write summary.csv");
    summary << "frame_id,points,dropped,occupied_voxels,kept_voxels,labeled_voxels\n";
    std::size_t failures = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
      const Outcome& o = outcomes[i];
      if (!o.result) {
        ++failures;
        log << "frame " << frames[i].frame_id << " skipped: " << o.error << '\n';
        continue;
      }
      const FrameOccupancy& r = *o.result;
      summary << r.frame_id << ',' << r.points << ',' << r.dropped << ',' << r.occupied_voxels << ','
              << r.kept_voxels << ',' << r.labeled_voxels << '\n';
    }
    log << (frames.size() - failures) << " of " << frames.size() << " frames written to "
        << opt.out_dir.string() << '\n';
    return (!frames.empty() && failures == frames.size()) ? kExitInput : kExitOk;
  });
}

// ---------------------------------------------------------------------------

MetricsReport compute_metrics(const MetricsOptions& opt) {
  const DisparityMap pred = read_pfm(opt.pred);
  const DisparityMap gt = read_pfm(opt.gt);
  require_same_shape(pred, gt, "prediction and ground truth differ in shape");
  Mask mask(gt.width(), gt.height(), 0);
  if (opt.mask) {
    const LabelMap m = read_pgm(*opt.mask);
    require_same_shape(m, gt, "mask differs in shape");
    for (std::size_t i = 0; i < m.count(); ++i) mask[i] = m[i] != 0;
  } else {
    for (std::size_t i = 0; i < gt.count(); ++i) mask[i] = std::isfinite(gt[i]) && gt[i] > 0.0;
  }

  MetricsReport report;
  report.depth = opt.align ? evaluate_depth_aligned(pred, gt, mask) : depth_metrics(pred, gt, mask);

  if (opt.pred_labels.has_value() != opt.gt_labels.has_value()) {
    throw Error(ErrorCode::InvalidArgument, "IoU needs both --pred-labels and --gt-labels");
  }
  if (opt.pred_labels) {
    std::vector<ClassId> classes;
    for (int c : opt.classes) {
      if (c < 0 || c > 254) throw Error(ErrorCode::InvalidArgument, "class ids must lie in [0, 254]");
      classes.push_back(static_cast<ClassId>(c));
    }
    report.seg = seg_iou(read_pgm(*opt.pred_labels), read_pgm(*opt.gt_labels), classes);
  }
  return report;
}

void print_metrics(std::ostream& out, const MetricsReport& report) {
  out << "rmse=" << fmt_double(report.depth.rmse) << '\n'
      << "a1=" << fmt_double(report.depth.a1) << '\n'
      << "a2=" << fmt_double(report.depth.a2) << '\n'
      << "a3=" << fmt_double(report.depth.a3) << '\n';
  if (report.seg) {
    for (const auto& [c, iou] : report.seg->per_class_iou) {
      out << "iou_" << static_cast<int>(c) << '=' << fmt_double(iou) << '\n';
    }
    out << "mean_iou=" << fmt_double(report.seg->mean_iou) << '\n';
  }
}

int cmd_metrics(const MetricsOptions& opt, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    const MetricsReport report = compute_metrics(opt);
    print_metrics(out, report);
    if (opt.csv) {
      const bool fresh = !std::filesystem::exists(*opt.csv) || std::filesystem::file_size(*opt.csv) == 0;
      std::ofstream csv(*opt.csv, std::ios::app);
      if (!csv) throw Error(ErrorCode::IoFailure, "cannot write " + opt.csv->string());
      if (fresh) csv << "pred,gt,aligned,rmse,a1,a2,a3,mean_iou\n";
      csv << opt.pred.string() << ',' << opt.gt.string() << ',' << (opt.align ? 1 : 0) << ','
          << fmt_double(report.depth.rmse) << ',' << fmt_double(report.depth.a1) << ','
          << fmt_double(report.depth.a2) << ',' << fmt_double(report.depth.a3) << ','
          << (report.seg ? fmt_double(report.seg->mean_iou) : std::string()) << '\n';
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

int cmd_boost_merge(const BoostMergeOptions& opt, std::ostream& log) {
  return guarded(log, [&] {
    if (opt.estimates.empty()) throw Error(ErrorCode::EmptyInput, "no estimate files given");
    std::vector<ResolutionEstimate> estimates;
    for (const auto& path : opt.estimates) {
      DisparityMap d = read_pfm(path);
      const Size2 native = d.size();
      estimates.push_back({std::move(d), native});
    }
    const FusionResult fused = fuse_multi_resolution(estimates, opt.target);
    for (std::size_t i : fused.skipped) log << "skipped degenerate estimate " << opt.estimates[i].string() << '\n';
    write_pfm(opt.out, fused.fused);
    log << "fused " << (estimates.size() - fused.skipped.size()) << " estimates into "
        << opt.out.string() << '\n';
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

DemoResult run_patchwise_demo(const DemoOptions& opt) {
  const Dataset data = make_synthetic_dataset();
  ModelConfig mc;
  mc.input_dim = data.front().input.cols();
  mc.hidden_dim = opt.hidden_dim;
  mc.trunk_layers = opt.trunk_layers;
  mc.variant = opt.variant;
  mc.seed = opt.seed;
  ToyModel model(mc);

  DemoResult result;
  if (opt.variant == Variant::V3) {
    result.pretrain = pretrain_trunk(model, data, opt.pretrain_epochs, opt.learning_rate);
  }
  const TrainConfig train{opt.learning_rate, opt.bce_weight};
  result.initial = evaluate(model, data, opt.bce_weight);
  if (opt.plain) {
    result.reports = run_plain_epochs(model, opt.epochs, data, train);
  } else {
    PatchwiseOptions po;
    po.mode = opt.sequential ? PatchMode::Sequential : PatchMode::Jacobi;
    po.encoder_percentage = opt.encoder_percentage;
    result.reports = run_patchwise_epochs(model, opt.percentage, opt.epochs, data, train, po);
  }
  result.final = evaluate(model, data, opt.bce_weight);
  result.final_checksum = model.parameters().checksum();
  if (opt.checkpoint) save_checkpoint(*opt.checkpoint, model.parameters());
  return result;
}

int cmd_patchwise_demo(const DemoOptions& opt, std::ostream& out, std::ostream& log) {
  return guarded(log, [&] {
    if (!(opt.percentage > 0.0 && opt.percentage <= 1.0)) {
      throw Error(ErrorCode::InvalidPercentage, "--percentage must lie in (0, 1]");
    }
    log << "variant=" << to_string(opt.variant) << " percentage=" << opt.percentage
        << " epochs=" << opt.epochs << " seed=" << opt.seed
        << (opt.plain ? " mode=plain" : opt.sequential ? " mode=sequential (not PatchWise)" : " mode=patchwise")
        << '\n';
    const DemoResult r = run_patchwise_demo(opt);
    if (opt.report) {
      std::ofstream csv(*opt.report, std::ios::trunc);
      if (!csv) throw Error(ErrorCode::IoFailure, "cannot write " + opt.report->string());
      write_report_csv(csv, r.reports);
    }
    if (r.pretrain) {
      out << "pretrain_initial_ssi=" << fmt_double(r.pretrain->initial_loss)
          << " pretrain_final_ssi=" << fmt_double(r.pretrain->final_loss) << '\n';
    }
    out << "initial_joint_loss=" << fmt_double(r.initial.joint_loss)
        << " joint_loss=" << fmt_double(r.final.joint_loss)
        << " rmse_aligned=" << fmt_double(r.final.rmse_aligned)
        << " seg_accuracy=" << fmt_double(r.final.seg_accuracy) << '\n';
    if (!std::isfinite(r.final.joint_loss)) {
      log << "error: training diverged (joint loss is not finite)\n";
      return kExitInternal;
    }
    return kExitOk;
  });
}

}  // namespace monoocc::pipeline
