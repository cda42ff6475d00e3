#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <vector>

#include "monoocc/autodiff.hpp"
#include "monoocc/model.hpp"

namespace monoocc {

struct PatchRange {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive

  std::size_t size() const { return end - start; }
  bool contains(std::size_t i) const { return i >= start && i < end; }
  friend bool operator==(const PatchRange&, const PatchRange&) = default;
};

/// Contiguous partition of the first n parameter slots into ceil(n / m) ranges.
struct PatchPlan {
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<PatchRange> ranges;
};

/// m = round-half-up(n * train_percentage), at least 1.
/// Throws InvalidPercentage unless 0 < train_percentage <= 1, InvalidArgument for n == 0.
PatchPlan plan_patches(std::size_t n, double train_percentage);

/// Encoder-percentage plan: patches cover only the first
/// round-half-up(trunk_slots * encoder_percentage) trunk slots; every other
/// slot stays frozen for the whole pass.
PatchPlan plan_encoder_patches(std::size_t trunk_slots, double encoder_percentage,
                               double train_percentage);

/// Losses a train step may report; NaN when it does not track them.
struct StepLoss {
  double before = std::numeric_limits<double>::quiet_NaN();
  double after = std::numeric_limits<double>::quiet_NaN();
};

/// Called with the store's requires_grad flags set for the active patch.
/// Must only change trainable slots.
using TrainStep = std::function<StepLoss(ParameterStore&)>;

enum class PatchMode {
  /// Every patch starts from the common pre-call snapshot; results are stitched.
  Jacobi,
  /// Each patch starts from the previous patch's result. Comparison baseline only.
  Sequential,
};

struct PatchRecord {
  std::size_t patch_index = 0;
  PatchRange range;
  std::size_t train_steps = 0;
  std::size_t max_grad_buffers = 0;
  std::uint64_t checksum_before = 0;
  std::uint64_t checksum_after = 0;
  double loss_before = std::numeric_limits<double>::quiet_NaN();
  double loss_after = std::numeric_limits<double>::quiet_NaN();
};

struct PatchTrainReport {
  std::vector<PatchRecord> patches;
  double wall_seconds = 0.0;
};

/// One PatchWise pass. In Jacobi mode every patch trains from the snapshot
/// taken on entry and each slot finally carries the value its own patch
/// produced. Slots outside the plan keep their snapshot value. On return all
/// slots are trainable again and hold no gradient buffer.
/// Throws TrainStepMutatedFrozen if a step changes a frozen slot.
PatchTrainReport patchwise_train(ParameterStore& params, const PatchPlan& plan,
                                 const TrainStep& step, PatchMode mode = PatchMode::Jacobi);

PatchTrainReport patchwise_train(ParameterStore& params, double train_percentage,
                                 const TrainStep& step, PatchMode mode = PatchMode::Jacobi);

struct PatchwiseOptions {
  PatchMode mode = PatchMode::Jacobi;
  /// Negative: plain plan over every slot. Otherwise the encoder-percentage plan.
  double encoder_percentage = -1.0;
};

/// PatchWise epochs where each train step is one SGD pass over the data.
std::vector<PatchTrainReport> run_patchwise_epochs(ToyModel& model, double train_percentage,
                                                   std::size_t epochs, const Dataset& data,
                                                   const TrainConfig& train,
                                                   const PatchwiseOptions& options = {});

/// Ordinary full-model training, reported in the same shape (one patch
/// covering every slot per epoch).
std::vector<PatchTrainReport> run_plain_epochs(ToyModel& model, std::size_t epochs,
                                               const Dataset& data, const TrainConfig& train);

/// CSV: epoch,patch_index,start,end,loss_before,loss_after,max_grad_buffers
void write_report_csv(std::ostream& out, const std::vector<PatchTrainReport>& epochs);

}  // namespace monoocc
