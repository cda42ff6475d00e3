#pragma once

#include <cstdint>
#include <vector>

#include "monoocc/autodiff.hpp"

namespace monoocc {

/// V1: separate disparity and segmentation trunks.
/// V2: one shared trunk trained from scratch.
/// V3: the V2 layout with trunk and disparity head warm-started by
///     regression-only pretraining (see pretrain_trunk).
enum class Variant { V1, V2, V3 };

Variant parse_variant(const std::string& name);
std::string to_string(Variant v);

struct ModelConfig {
  std::size_t input_dim = 4;
  std::size_t hidden_dim = 8;
  std::size_t trunk_layers = 1;
  Variant variant = Variant::V2;
  std::uint64_t seed = 0;
};

struct ModelOutput {
  Var disparity;   // n x 1
  Var seg_logits;  // n x 1
};

/// Dense per-pixel model: tanh trunk layers, then a linear disparity head and
/// a linear segmentation head. Rows of the input are pixels.
///
/// Canonical slot order (each layer is weight then bias):
///   V2/V3: trunk layers, disparity head, segmentation head
///   V1:    disparity trunk, segmentation trunk, disparity head, segmentation head
class ToyModel {
 public:
  explicit ToyModel(const ModelConfig& config);

  ModelOutput forward(Graph& graph, const Matrix& input) const;

  ParameterStore& parameters() { return params_; }
  const ParameterStore& parameters() const { return params_; }
  const ModelConfig& config() const { return config_; }

  /// Slots of every trunk (a leading prefix of the canonical order).
  std::size_t trunk_slot_count() const;
  std::vector<std::size_t> disparity_head_slots() const;
  std::vector<std::size_t> seg_head_slots() const;

 private:
  Var run_trunk(Graph& graph, Var x, std::size_t first_slot) const;

  ModelConfig config_;
  ParameterStore params_;
};

/// One training image flattened to pixels.
struct Frame {
  Matrix input;                     // n x input_dim
  Matrix disparity;                 // n x 1
  Matrix segmentation;              // n x 1, values 0 or 1
  std::vector<std::uint8_t> mask;   // n, disparity supervision mask
};

using Dataset = std::vector<Frame>;

/// ssi(disparity) + bce_weight * mean BCE(sigmoid(logits), seg_gt).
Var joint_loss(Graph& graph, Var disparity_pred, const Matrix& disparity_gt, Var seg_logits,
               const Matrix& seg_gt, const std::vector<std::uint8_t>& mask, double bce_weight = 1.0);

struct TrainConfig {
  double learning_rate = 0.05;
  double bce_weight = 1.0;
};

/// Mean joint loss over the frames; no gradients are touched.
double mean_joint_loss(const ToyModel& model, const Dataset& data, double bce_weight = 1.0);

/// One pass over the data, one SGD step per frame.
void train_epoch(ToyModel& model, const Dataset& data, const TrainConfig& config);

struct EvalSummary {
  double joint_loss = 0.0;
  /// Mean over frames of the per-frame scale/shift-aligned disparity RMSE.
  double rmse_aligned = 0.0;
  /// Fraction of pixels with (logit > 0) == label.
  double seg_accuracy = 0.0;
};

EvalSummary evaluate(const ToyModel& model, const Dataset& data, double bce_weight = 1.0);

struct PretrainResult {
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

/// Regression-only warm start for V3: trains trunk and disparity head on the
/// SSI loss with the segmentation head frozen. Throws InvalidArgument for
/// other variants.
PretrainResult pretrain_trunk(ToyModel& model, const Dataset& data, std::size_t epochs,
                              double learning_rate);

struct SyntheticConfig {
  std::size_t frames = 8;
  std::size_t pixels = 64;
  std::size_t input_dim = 4;
  std::size_t teacher_hidden = 8;
  std::uint64_t seed = 20231101;
};

/// Frames labeled by a fixed random teacher network, so both targets are
/// exactly realizable by a shared trunk. Every 16th pixel is unsupervised
/// for disparity.
Dataset make_synthetic_dataset(const SyntheticConfig& config = {});

}  // namespace monoocc
