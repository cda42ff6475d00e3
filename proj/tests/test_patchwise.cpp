#include <cmath>
#include <cstring>
#include <sstream>

#include "monoocc/patchwise.hpp"
#include "test_support.hpp"

using namespace monoocc;

namespace {

ParameterStore scalars(std::initializer_list<double> values) {
  ParameterStore s;
  std::size_t i = 0;
  for (double v : values) s.add("p" + std::to_string(i++), Matrix::Constant(1, 1, v));
  return s;
}

std::vector<double> values_of(const ParameterStore& s) {
  std::vector<double> out;
  for (const auto& p : s) out.push_back(p.value(0, 0));
  return out;
}

StepLoss add_one(ParameterStore& s) {
  for (auto& p : s) {
    if (p.requires_grad) p.value(0, 0) += 1.0;
  }
  return {};
}

StepLoss set_to_sum(ParameterStore& s) {
  double total = 0.0;
  for (const auto& p : s) total += p.value(0, 0);
  for (auto& p : s) {
    if (p.requires_grad) p.value(0, 0) = total;
  }
  return {};
}

void expect_partition(const PatchPlan& plan) {
  ASSERT_FALSE(plan.ranges.empty());
  EXPECT_EQ(plan.ranges.front().start, 0u);
  EXPECT_EQ(plan.ranges.back().end, plan.n);
  EXPECT_EQ(plan.ranges.size(), (plan.n + plan.m - 1) / plan.m);
  for (std::size_t r = 0; r < plan.ranges.size(); ++r) {
    if (r > 0) EXPECT_EQ(plan.ranges[r].start, plan.ranges[r - 1].end);
    if (r + 1 < plan.ranges.size()) {
      EXPECT_EQ(plan.ranges[r].size(), plan.m);
    } else {
      EXPECT_GE(plan.ranges[r].size(), 1u);
      EXPECT_LE(plan.ranges[r].size(), plan.m);
    }
  }
}

}  // namespace

TEST(PlanPatches, Examples) {
  const auto a = plan_patches(10, 0.5);
  EXPECT_EQ(a.m, 5u);
  EXPECT_EQ(a.ranges, (std::vector<PatchRange>{{0, 5}, {5, 10}}));
  const auto b = plan_patches(10, 1.0);
  EXPECT_EQ(b.ranges, (std::vector<PatchRange>{{0, 10}}));
  const auto c = plan_patches(7, 0.5);
  EXPECT_EQ(c.m, 4u);
  EXPECT_EQ(c.ranges, (std::vector<PatchRange>{{0, 4}, {4, 7}}));
}

TEST(PlanPatches, SmallProductsClampToOneSlot) {
  const auto p = plan_patches(3, 0.1);
  EXPECT_EQ(p.m, 1u);
  EXPECT_EQ(p.ranges.size(), 3u);
}

TEST(PlanPatches, InvalidInputs) {
  EXPECT_MONOOCC_ERROR(plan_patches(10, 0.0), ErrorCode::InvalidPercentage);
  EXPECT_MONOOCC_ERROR(plan_patches(10, 1.5), ErrorCode::InvalidPercentage);
  EXPECT_MONOOCC_ERROR(plan_patches(10, std::nan("")), ErrorCode::InvalidPercentage);
  EXPECT_MONOOCC_ERROR(plan_patches(0, 0.5), ErrorCode::InvalidArgument);
}

TEST(PlanPatches, ExactPartitionForAllSizes) {
  for (std::size_t n = 1; n <= 1000; ++n) {
    for (int tenth = 1; tenth <= 10; ++tenth) {
      const PatchPlan plan = plan_patches(n, tenth / 10.0);
      ASSERT_NO_FATAL_FAILURE(expect_partition(plan)) << n << " " << tenth;
      const double exact = static_cast<double>(n) * tenth / 10.0;
      const auto half_up = static_cast<std::size_t>(std::floor(exact + 0.5 + 1e-9));
      ASSERT_EQ(plan.m, std::max<std::size_t>(1, half_up)) << n << " " << tenth;
    }
  }
}

TEST(PlanEncoderPatches, CoversOnlyTheLeadingTrunkSlots) {
  const auto p = plan_encoder_patches(8, 0.5, 0.5);
  EXPECT_EQ(p.ranges, (std::vector<PatchRange>{{0, 2}, {2, 4}}));
  EXPECT_MONOOCC_ERROR(plan_encoder_patches(8, 0.0, 0.5), ErrorCode::InvalidPercentage);
}

TEST(PatchwiseTrain, AddOneTrace) {
  ParameterStore s = scalars({1, 2});
  patchwise_train(s, 0.5, add_one);
  EXPECT_EQ(values_of(s), (std::vector<double>{2, 3}));
}

TEST(PatchwiseTrain, SumTracePinsSnapshotSemantics) {
  ParameterStore s = scalars({1, 2});
  patchwise_train(s, 0.5, set_to_sum);
  EXPECT_EQ(values_of(s), (std::vector<double>{3, 3}));
}

TEST(PatchwiseTrain, SequentialModeRefinesInPlace) {
  ParameterStore s = scalars({1, 2});
  patchwise_train(s, 0.5, set_to_sum, PatchMode::Sequential);
  EXPECT_EQ(values_of(s), (std::vector<double>{3, 5}));
}

TEST(PatchwiseTrain, FullPercentageEqualsOneCall) {
  ParameterStore a = scalars({1, 2, 3});
  ParameterStore b = a;
  patchwise_train(a, 1.0, set_to_sum);
  set_to_sum(b);
  EXPECT_EQ(a.checksum(), b.checksum());
}

TEST(PatchwiseTrain, RecordsPerPatch) {
  ParameterStore s = scalars({1, 2, 3, 4, 5});
  const auto report = patchwise_train(s, 0.4, [](ParameterStore& st) {
    add_one(st);
    return StepLoss{1.0, 0.5};
  });
  ASSERT_EQ(report.patches.size(), 3u);
  EXPECT_EQ(report.patches[2].range, (PatchRange{4, 5}));
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(report.patches[i].patch_index, i);
    EXPECT_EQ(report.patches[i].train_steps, 1u);
    EXPECT_NE(report.patches[i].checksum_before, report.patches[i].checksum_after);
    EXPECT_EQ(report.patches[i].loss_after, 0.5);
  }
  EXPECT_GE(report.wall_seconds, 0.0);
  for (const auto& p : s) EXPECT_TRUE(p.requires_grad);
}

TEST(PatchwiseTrain, MutatingAFrozenSlotIsDetected) {
  ParameterStore s = scalars({1, 2});
  auto rogue = [](ParameterStore& st) {
    for (auto& p : st) p.value(0, 0) += 1.0;
    return StepLoss{};
  };
  EXPECT_MONOOCC_ERROR(patchwise_train(s, 0.5, rogue), ErrorCode::TrainStepMutatedFrozen);
}

TEST(PatchwiseTrain, FrozenSlotsMatchSnapshotInsideEachPatch) {
  ParameterStore s = scalars({1, 2, 3, 4});
  const auto snap = s.snapshot();
  bool all_ok = true;
  patchwise_train(s, 0.5, [&](ParameterStore& st) {
    for (std::size_t i = 0; i < st.size(); ++i) {
      if (!st[i].requires_grad && std::memcmp(snap[i].data(), st[i].value.data(), sizeof(double)) != 0) {
        all_ok = false;
      }
    }
    return add_one(st);
  });
  EXPECT_TRUE(all_ok);
}

TEST(RunPatchwiseEpochs, ZeroEpochsLeavesModelAlone) {
  ToyModel m({4, 8, 1, Variant::V2, 1});
  const auto before = m.parameters().checksum();
  const auto reports = run_patchwise_epochs(m, 0.5, 0, make_synthetic_dataset(), {});
  EXPECT_TRUE(reports.empty());
  EXPECT_EQ(m.parameters().checksum(), before);
}

TEST(RunPatchwiseEpochs, FullPercentageMatchesPlainTraining) {
  const Dataset data = make_synthetic_dataset();
  ToyModel a({4, 8, 1, Variant::V2, 1});
  ToyModel b({4, 8, 1, Variant::V2, 1});
  const auto ra = run_patchwise_epochs(a, 1.0, 7, data, {});
  const auto rb = run_plain_epochs(b, 7, data, {});
  EXPECT_EQ(a.parameters().checksum(), b.parameters().checksum());
  std::ostringstream ca, cb;
  write_report_csv(ca, ra);
  write_report_csv(cb, rb);
  EXPECT_EQ(ca.str(), cb.str());
}

TEST(RunPatchwiseEpochs, GradBuffersStayWithinThePatch) {
  const Dataset data = make_synthetic_dataset();
  ToyModel m({4, 8, 6, Variant::V2, 3});
  ASSERT_EQ(m.parameters().size(), 16u);
  for (double p : {0.25, 0.5, 0.75}) {
    const auto plan = plan_patches(16, p);
    const auto reports = run_patchwise_epochs(m, p, 2, data, {});
    for (const auto& r : reports) {
      for (const auto& rec : r.patches) {
        EXPECT_LE(rec.max_grad_buffers, plan.m);
        EXPECT_EQ(rec.max_grad_buffers, rec.range.size());
      }
    }
  }
}

TEST(RunPatchwiseEpochs, LossDropsOnTheSyntheticTask) {
  const Dataset data = make_synthetic_dataset();
  ToyModel m({4, 8, 1, Variant::V2, 0});
  const double initial = mean_joint_loss(m, data);
  run_patchwise_epochs(m, 0.5, 40, data, {});
  EXPECT_LT(mean_joint_loss(m, data), initial);
}

TEST(ReportCsv, HeaderAndRows) {
  ParameterStore s = scalars({1, 2});
  const auto r = patchwise_train(s, 0.5, [](ParameterStore& st) {
    add_one(st);
    return StepLoss{0.25, 0.125};
  });
  std::ostringstream out;
  write_report_csv(out, {r});
  EXPECT_EQ(out.str(),
            "epoch,patch_index,start,end,loss_before,loss_after,max_grad_buffers\n"
            "0,0,0,1,0.25,0.125,0\n"
            "0,1,1,2,0.25,0.125,0\n");
}
