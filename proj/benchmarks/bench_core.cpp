#include <benchmark/benchmark.h>

#include "metaadapt/controller.hpp"
#include "metaadapt/linalg.hpp"
#include "metaadapt/metalearn.hpp"
#include "metaadapt/rng.hpp"
#include "metaadapt/trajectory.hpp"

using namespace metaadapt;
using kernels::Formulation;
using kernels::KernelModel;

namespace {

KernelModel model(Formulation f, Eigen::Index width = 32) {
  kernels::Architecture arch;
  arch.hidden = {width, width};
  arch.kernel_count = 10;
  return KernelModel::random(f, 3, arch, 7);
}

ConditionDataset random_dataset(std::size_t n) {
  Rng rng(3);
  ConditionDataset d{"bench", 0.0, 0.01, {}};
  auto v = [&] { return Vector(Vector::NullaryExpr(3, [&] { return rng.uniform(-1.0, 1.0); })); };
  for (std::size_t k = 0; k < n; ++k) d.samples.push_back({0.01 * static_cast<double>(k), v(), v(), v()});
  return d;
}

const dynamics::State hover_state{(Vector(3) << 0.1, -0.2, 1.0).finished(), (Vector(3) << 0.3, 0.0, -0.1).finished()};

}  // namespace

static void BM_KernelEval(benchmark::State& state) {
  const KernelModel m = model(static_cast<Formulation>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(m.eval(hover_state));
}
BENCHMARK(BM_KernelEval)->Arg(static_cast<int>(Formulation::Vector))->Arg(static_cast<int>(Formulation::Scalar));

static void BM_LeastSquares(benchmark::State& state) {
  const KernelModel m = model(Formulation::Vector);
  const ConditionDataset d = random_dataset(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(meta::a_ls(m, d.samples));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LeastSquares)->Arg(50)->Arg(500)->Arg(5000);

static void BM_MetaGradient(benchmark::State& state) {
  const KernelModel m = model(static_cast<Formulation>(state.range(0)));
  const ConditionDataset d = random_dataset(1200);
  const auto split = meta::draw_split(d.size(), 240, false, 1);
  const auto adapt = meta::gather(d, split.adapt), train = meta::gather(d, split.train);
  const meta::MetaConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(meta::meta_gradient(m, adapt, train, d.dt, cfg));
}
BENCHMARK(BM_MetaGradient)->Arg(static_cast<int>(Formulation::Vector))->Arg(static_cast<int>(Formulation::Scalar));

static void BM_SpectralNorm(benchmark::State& state) {
  Rng rng(5);
  const auto n = state.range(0);
  const Matrix W = Matrix::NullaryExpr(n, n, [&] { return rng.uniform(-1.0, 1.0); });
  for (auto _ : state) benchmark::DoNotOptimize(spectral_norm(W, 200, 1));
}
BENCHMARK(BM_SpectralNorm)->Arg(8)->Arg(32)->Arg(128);

static void BM_AdaptationStep(benchmark::State& state) {
  const auto p = state.range(0);
  const adapt::Gains g = adapt::Gains::diagonal(3);
  Rng rng(9);
  const Matrix phi = Matrix::NullaryExpr(3, p, [&] { return rng.uniform(-1.0, 1.0); });
  adapt::AdaptiveState st(3, p, g);
  st = adapt::update_filters(std::move(st), phi, Vector::Ones(3), 0.01);
  const Vector s = Vector::Constant(3, 0.01);
  for (auto _ : state) benchmark::DoNotOptimize(adapt::adaptation_step(st, s, phi, g, 0.01));
}
BENCHMARK(BM_AdaptationStep)->Arg(3)->Arg(10)->Arg(30);

static void BM_ClosedLoopSecond(benchmark::State& state) {
  const dynamics::QuadrotorPointMass plant(1.47, 9.81);
  const KernelModel m = model(Formulation::Vector);
  const harness::Figure8Trajectory fig8(harness::TrajectoryParams{});
  const dynamics::WindField wind(dynamics::WindSchedule::constant(dynamics::WindCondition::from_speed(4.3), 1.0));
  const adapt::Gains g = adapt::Gains::diagonal(3);
  for (auto _ : state) benchmark::DoNotOptimize(adapt::run_controller(plant, m, g, fig8, wind, 1.0, 0.01, 1));
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_ClosedLoopSecond)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
