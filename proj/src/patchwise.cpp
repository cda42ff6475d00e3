#include "monoocc/patchwise.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ostream>

namespace monoocc {

namespace {

std::size_t round_half_up(double x) {
  // The epsilon keeps products such as 7 * 0.5 from rounding down on
  // representation error.
  return static_cast<std::size_t>(std::floor(x + 0.5 + 1e-9));
}

bool bit_identical(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

void check_percentage(double p) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::InvalidPercentage, "percentage must lie in (0, 1], got " + std::to_string(p));
  }
}

}  // namespace

PatchPlan plan_patches(std::size_t n, double train_percentage) {
  check_percentage(train_percentage);
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "cannot plan patches over zero slots");
  PatchPlan plan;
  plan.n = n;
  plan.m = std::max<std::size_t>(1, round_half_up(static_cast<double>(n) * train_percentage));
  plan.m = std::min(plan.m, n);
  const std::size_t iterations = (n + plan.m - 1) / plan.m;
  for (std::size_t k = 0; k < iterations; ++k) {
    const std::size_t start = k * plan.m;
    plan.ranges.push_back({start, std::min(start + plan.m, n)});
  }
  return plan;
}

PatchPlan plan_encoder_patches(std::size_t trunk_slots, double encoder_percentage,
                               double train_percentage) {
  check_percentage(encoder_percentage);
  if (trunk_slots == 0) throw Error(ErrorCode::InvalidArgument, "model has no trunk slots");
  const std::size_t eligible = std::clamp<std::size_t>(
      round_half_up(static_cast<double>(trunk_slots) * encoder_percentage), 1, trunk_slots);
  return plan_patches(eligible, train_percentage);
}

PatchTrainReport patchwise_train(ParameterStore& params, const PatchPlan& plan,
                                 const TrainStep& step, PatchMode mode) {
  if (plan.n > params.size()) {
    throw Error(ErrorCode::InvalidArgument, "plan covers more slots than the model has");
  }
  const auto t0 = std::chrono::steady_clock::now();
  PatchTrainReport report;

  const std::vector<Matrix> saved = params.snapshot();
  std::vector<Matrix> updated = saved;

  for (std::size_t k = 0; k < plan.ranges.size(); ++k) {
    const PatchRange range = plan.ranges[k];
    if (mode == PatchMode::Jacobi) params.restore(saved);
    const std::vector<Matrix> entry = mode == PatchMode::Jacobi ? saved : params.snapshot();

    for (std::size_t i = 0; i < params.size(); ++i) params[i].requires_grad = range.contains(i);
    params.release_grads();
    params.reset_peak();

    PatchRecord rec;
    rec.patch_index = k;
    rec.range = range;
    rec.checksum_before = params.checksum();
    const StepLoss loss = step(params);
    rec.train_steps = 1;
    rec.loss_before = loss.before;
    rec.loss_after = loss.after;
    rec.max_grad_buffers = std::max(params.peak_grad_buffers(), params.grad_buffer_count());

    for (std::size_t i = 0; i < params.size(); ++i) {
      if (!range.contains(i) && !bit_identical(params[i].value, entry[i])) {
        throw Error(ErrorCode::TrainStepMutatedFrozen,
                    "train step changed frozen slot " + std::to_string(i) + " ('" +
                        params[i].name() + "') during patch " + std::to_string(k));
      }
    }
    for (std::size_t i = range.start; i < range.end; ++i) updated[i] = params[i].value;
    rec.checksum_after = params.checksum();
    report.patches.push_back(rec);
  }

  if (mode == PatchMode::Jacobi) {
    params.restore(updated);
  } else {
    // Sequential mode already holds every patch's result; slots outside the
    // plan were never trainable, so this only normalizes them to the snapshot.
    for (std::size_t i = plan.n; i < params.size(); ++i) params[i].value = saved[i];
  }
  params.set_requires_grad(true);
  params.release_grads();

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

PatchTrainReport patchwise_train(ParameterStore& params, double train_percentage,
                                 const TrainStep& step, PatchMode mode) {
  return patchwise_train(params, plan_patches(params.size(), train_percentage), step, mode);
}

namespace {

TrainStep epoch_step(ToyModel& model, const Dataset& data, const TrainConfig& train) {
  return [&model, &data, train](ParameterStore&) {
    StepLoss loss;
    loss.before = mean_joint_loss(model, data, train.bce_weight);
    train_epoch(model, data, train);
    loss.after = mean_joint_loss(model, data, train.bce_weight);
    return loss;
  };
}

}  // namespace

std::vector<PatchTrainReport> run_patchwise_epochs(ToyModel& model, double train_percentage,
                                                   std::size_t epochs, const Dataset& data,
                                                   const TrainConfig& train,
                                                   const PatchwiseOptions& options) {
  ParameterStore& params = model.parameters();
  const PatchPlan plan =
      options.encoder_percentage < 0.0
          ? plan_patches(params.size(), train_percentage)
          : plan_encoder_patches(model.trunk_slot_count(), options.encoder_percentage,
                                 train_percentage);
  const TrainStep step = epoch_step(model, data, train);
  std::vector<PatchTrainReport> reports;
  reports.reserve(epochs);
  for (std::size_t e = 0; e < epochs; ++e) {
    reports.push_back(patchwise_train(params, plan, step, options.mode));
  }
  return reports;
}

std::vector<PatchTrainReport> run_plain_epochs(ToyModel& model, std::size_t epochs,
                                               const Dataset& data, const TrainConfig& train) {
  ParameterStore& params = model.parameters();
  const TrainStep step = epoch_step(model, data, train);
  std::vector<PatchTrainReport> reports;
  reports.reserve(epochs);
  for (std::size_t e = 0; e < epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    params.set_requires_grad(true);
    params.release_grads();
    params.reset_peak();
    PatchRecord rec;
    rec.range = {0, params.size()};
    rec.checksum_before = params.checksum();
    const StepLoss loss = step(params);
    rec.train_steps = 1;
    rec.loss_before = loss.before;
    rec.loss_after = loss.after;
    rec.max_grad_buffers = std::max(params.peak_grad_buffers(), params.grad_buffer_count());
    rec.checksum_after = params.checksum();
    params.release_grads();
    PatchTrainReport report;
    report.patches.push_back(rec);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    reports.push_back(std::move(report));
  }
  return reports;
}

void write_report_csv(std::ostream& out, const std::vector<PatchTrainReport>& epochs) {
  out << "epoch,patch_index,start,end,loss_before,loss_after,max_grad_buffers\n";
  char buf[256];
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    for (const PatchRecord& r : epochs[e].patches) {
      std::snprintf(buf, sizeof buf, "%zu,%zu,%zu,%zu,%.17g,%.17g,%zu\n", e, r.patch_index,
                    r.range.start, r.range.end, r.loss_before, r.loss_after, r.max_grad_buffers);
      out << buf;
    }
  }
}

}  // namespace monoocc
