// Serial reference vs OpenMP kernel timings. Thread count follows
// OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>

#include "monoocc/geometry.hpp"
#include "monoocc/metrics.hpp"
#include "monoocc/pseudolabel.hpp"
#include "monoocc/voxel.hpp"

using namespace monoocc;

namespace {

DisparityMap random_map(std::size_t w, std::size_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(0.5, 80.0);
  DisparityMap m(w, h);
  for (auto& x : m.values()) x = d(rng);
  return m;
}

LabelMap random_labels(std::size_t w, std::size_t h) {
  LabelMap l(w, h);
  for (std::size_t i = 0; i < l.count(); ++i) l[i] = static_cast<ClassId>(i % 19);
  return l;
}

const CameraIntrinsics kCamera{721.5, 721.5, 609.6, 172.9, 0.54};

LabeledCloud random_cloud(std::size_t n) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> x(-25.6, 25.6), y(-2.0, 4.4), z(0.0, 51.2);
  LabeledCloud c;
  c.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) c.points.push_back({x(rng), y(rng), z(rng), ClassId(i % 19)});
  return c;
}

Mask sparse_edges(std::size_t w, std::size_t h) {
  Mask m(w, h, 0);
  for (std::size_t i = 0; i < m.count(); i += 97) m[i] = 1;
  return m;
}

template <auto Fn>
void BM_Project(benchmark::State& state) {
  const auto d = random_map(1242, 375, 1);
  const auto l = random_labels(1242, 375);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(d, l, kCamera, 1e-3));
}

template <auto Fn>
void BM_Voxelize(benchmark::State& state) {
  const auto cloud = random_cloud(static_cast<std::size_t>(state.range(0)));
  const GridSpec spec = default_grid_spec();
  for (auto _ : state) benchmark::DoNotOptimize(Fn(cloud, spec));
}

template <auto Fn>
void BM_Rmse(benchmark::State& state) {
  const auto p = random_map(1242, 375, 1), g = random_map(1242, 375, 2);
  const Mask m = full_mask(p.size());
  for (auto _ : state) benchmark::DoNotOptimize(Fn(p, g, m));
}

template <auto Fn>
void BM_Upsample(benchmark::State& state) {
  const auto r = random_map(384, 384, 4);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(r, Size2{1024, 1024}));
}

template <auto Fn>
void BM_Distance(benchmark::State& state) {
  const auto edges = sparse_edges(static_cast<std::size_t>(state.range(0)), static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(edges));
}

}  // namespace

BENCHMARK(BM_Project<serial::project_map>)->Name("project_map/serial");
BENCHMARK(BM_Project<project_map>)->Name("project_map/omp");
BENCHMARK(BM_Voxelize<serial::voxelize>)->Name("voxelize/serial")->Arg(1 << 17)->Arg(1 << 20);
BENCHMARK(BM_Voxelize<voxelize>)->Name("voxelize/omp")->Arg(1 << 17)->Arg(1 << 20);
BENCHMARK(BM_Rmse<serial::rmse>)->Name("rmse/serial");
BENCHMARK(BM_Rmse<rmse>)->Name("rmse/omp");
BENCHMARK(BM_Upsample<serial::bilinear_upsample>)->Name("bilinear_upsample/serial");
BENCHMARK(BM_Upsample<bilinear_upsample>)->Name("bilinear_upsample/omp");
BENCHMARK(BM_Distance<serial::distance_to_edges>)->Name("distance_to_edges/serial")->Arg(64);
BENCHMARK(BM_Distance<distance_to_edges>)->Name("distance_to_edges/omp")->Arg(64)->Arg(512);

BENCHMARK_MAIN();
