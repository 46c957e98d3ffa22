#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "metaadapt/dataset.hpp"
#include "metaadapt/errors.hpp"
#include "metaadapt/kernel_model.hpp"
#include "metaadapt/metalearn.hpp"
#include "metaadapt/rng.hpp"
#include "oracles.hpp"

using namespace metaadapt;
using namespace metaadapt::meta;
using kernels::Architecture;
using kernels::Formulation;
using kernels::KernelModel;

namespace {

Architecture tiny_arch(Eigen::Index m, std::vector<Eigen::Index> hidden = {8, 8}) {
  Architecture a;
  a.hidden = std::move(hidden);
  a.kernel_count = m;
  a.sigma_bar = 2.0;
  a.power_iters = 60;
  return a;
}

Vector box(double v) { return Vector::Constant(6, v); }

std::vector<ConditionDataset> teacher_sets(const KernelModel& teacher, int conditions, std::size_t samples,
                                           std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> coeffs;
  for (int c = 0; c < conditions; ++c) coeffs.push_back(oracle::random_matrix(rng, teacher.coefficient_count(), 1));
  return teacher_datasets(teacher, coeffs, samples, 0.01, box(-1.0), box(1.0), seed + 1);
}

ConditionDataset random_dataset(std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  ConditionDataset d{"random", 0.0, 0.01, {}};
  for (std::size_t k = 0; k < samples; ++k)
    d.samples.push_back({0.01 * static_cast<double>(k), oracle::random_matrix(rng, 3, 1),
                         oracle::random_matrix(rng, 3, 1), oracle::random_matrix(rng, 3, 1)});
  return d;
}

}  // namespace

TEST(ALs, ConstantKernelEqualForces) {
  ConditionDataset d = random_dataset(12, 1);
  const Vector f0 = (Vector(3) << 0.5, -1.0, 2.0).finished();
  for (auto& s : d.samples) s.f = f0;
  EXPECT_LE((a_ls(KernelModel::constant(3), d.samples) - f0).norm(), 1e-12);
}

TEST(ALs, RealizableData) {
  const KernelModel teacher = KernelModel::random(Formulation::Vector, 3, tiny_arch(4), 3);
  const auto sets = teacher_sets(teacher, 1, 60, 5);
  Rng rng(5);
  const Vector a0 = oracle::random_matrix(rng, 4, 1);
  EXPECT_LE((a_ls(teacher, sets[0].samples) - a0).norm(), 1e-8);
}

TEST(ALs, MatchesNormalEquationsOracle) {
  const KernelModel k = KernelModel::random(Formulation::Vector, 3, tiny_arch(10, {8}), 7);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const ConditionDataset d = random_dataset(50, 100 + s);
    const Vector a = a_ls(k, d.samples);
    const Matrix Phi = kernels::features(k, stacked_inputs(d.samples)).regressor();
    const Matrix F = stacked_forces(d.samples);
    const Matrix ref = oracle::normal_equations(Phi, Eigen::Map<const Matrix>(F.data(), F.size(), 1));
    EXPECT_LE((a - ref).norm(), 1e-6 * ref.norm());
  }
}

TEST(ALs, StationaryOnAdaptationSet) {
  const KernelModel k = KernelModel::random(Formulation::Scalar, 3, tiny_arch(3), 9);
  const ConditionDataset d = random_dataset(40, 11);
  const MetaSplit split = draw_split(d.size(), 18, false, 13);
  const std::vector<Sample> adapt = gather(d, split.adapt);
  const Vector a = a_ls(k, adapt);
  const double base = cost_j(k, a, adapt, d.dt);
  Rng rng(15);
  for (int t = 0; t < 50; ++t) {
    const Vector da = 1e-4 * oracle::random_matrix(rng, a.size(), 1);
    EXPECT_GE(cost_j(k, a + da, adapt, d.dt), base - 1e-15);
  }
}

TEST(ALs, JointMinimumNotBelowInnerSolve) {
  const KernelModel k = KernelModel::random(Formulation::Vector, 3, tiny_arch(1, {6}), 17);
  const ConditionDataset d = random_dataset(30, 19);
  const Vector a = a_ls(k, d.samples);
  const double inner = cost_j(k, a, d.samples, d.dt);
  double grid_min = std::numeric_limits<double>::infinity();
  for (double v = -20.0; v <= 20.0; v += 1e-3)
    grid_min = std::min(grid_min, cost_j(k, Vector::Constant(1, v), d.samples, d.dt));
  EXPECT_GE(grid_min, inner - 1e-12);
  EXPECT_LE(grid_min - inner, 1e-5);
}

TEST(CostJ, Examples) {
  const KernelModel k = KernelModel::constant(3);
  ConditionDataset d = random_dataset(1, 21);
  d.samples[0].f = (Vector(3) << 3, 4, 0).finished();
  EXPECT_NEAR(cost_j(k, Vector::Zero(3), d.samples, 0.01), 0.25, 1e-15);
  EXPECT_NEAR(cost_j(k, Vector::Zero(3), d.samples, 0.02), 0.5, 1e-15);
  EXPECT_EQ(cost_j(k, d.samples[0].f, d.samples, 0.01), 0.0);
}

TEST(Split, DisjointCoveringAndSeeded) {
  const MetaSplit s = draw_split(100, 20, false, 23);
  EXPECT_EQ(s.adapt.size(), 20u);
  EXPECT_EQ(s.train.size(), 80u);
  std::set<std::size_t> all(s.adapt.begin(), s.adapt.end());
  for (std::size_t i : s.train) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), 100u);
  EXPECT_EQ(*all.rbegin(), 99u);
  const MetaSplit again = draw_split(100, 20, false, 23);
  EXPECT_EQ(again.adapt, s.adapt);
  EXPECT_NE(draw_split(100, 20, false, 24).adapt, s.adapt);
  const MetaSplit full = draw_split(10, 3, true, 1);
  EXPECT_EQ(full.adapt, full.train);
  EXPECT_EQ(full.adapt.size(), 10u);
  EXPECT_THROW((void)draw_split(10, 10, false, 1), Error);
}

TEST(Split, AdaptationSizeRule) {
  const KernelModel k = KernelModel::random(Formulation::Vector, 3, tiny_arch(10, {4}), 1);
  MetaConfig cfg;
  EXPECT_EQ(adaptation_size(k, 50, cfg), 20u);
  EXPECT_EQ(adaptation_size(k, 1200, cfg), 240u);
}

class MetaGradientFd : public ::testing::TestWithParam<Formulation> {};

TEST_P(MetaGradientFd, StopGradientMatchesFrozenCoefficients) {
  const KernelModel k = KernelModel::random(GetParam(), 3, tiny_arch(3), 25)
                            .with_standardization({box(0.1), box(0.8)});
  const ConditionDataset d = random_dataset(40, 27);
  const MetaSplit split = draw_split(d.size(), 18, false, 29);
  const auto adapt = gather(d, split.adapt), train = gather(d, split.train);
  const MetaGradient g = meta_gradient(k, adapt, train, d.dt, MetaConfig{});
  const kernels::Parameters layout = k.networks();
  auto frozen = [&](const Vector& th) { return cost_j(k.with_parameters(kernels::unflatten(layout, th)), g.a, train, d.dt); };
  const Vector fd = oracle::central_difference(frozen, kernels::flatten(layout), 1e-5);
  EXPECT_LE((kernels::flatten(g.gradient) - fd).norm(), 1e-4 * fd.norm());
  EXPECT_NEAR(g.cost, pipeline_cost(k, adapt, train, d.dt, MetaConfig{}), 1e-14 * g.cost);
}

TEST_P(MetaGradientFd, FullPolicyMatchesPipeline) {
  const KernelModel k = KernelModel::random(GetParam(), 3, tiny_arch(3), 31)
                            .with_standardization({box(-0.1), box(1.3)});
  const ConditionDataset d = random_dataset(40, 33);
  const MetaSplit split = draw_split(d.size(), 18, false, 35);
  const auto adapt = gather(d, split.adapt), train = gather(d, split.train);
  MetaConfig cfg;
  cfg.gradient_policy = GradientPolicy::Full;
  const MetaGradient g = meta_gradient(k, adapt, train, d.dt, cfg);
  const kernels::Parameters layout = k.networks();
  auto pipe = [&](const Vector& th) {
    return pipeline_cost(k.with_parameters(kernels::unflatten(layout, th)), adapt, train, d.dt, cfg);
  };
  const Vector fd = oracle::central_difference(pipe, kernels::flatten(layout), 1e-5);
  EXPECT_LE((kernels::flatten(g.gradient) - fd).norm(), 1e-4 * fd.norm());
}

TEST_P(MetaGradientFd, PoliciesAgreeInFullBatch) {
  // At a_LS on the scored set the cost is stationary in a.
  const KernelModel k = KernelModel::random(GetParam(), 3, tiny_arch(3), 37);
  const ConditionDataset d = random_dataset(30, 39);
  MetaConfig stop, full;
  full.gradient_policy = GradientPolicy::Full;
  const Vector gs = kernels::flatten(meta_gradient(k, d.samples, d.samples, d.dt, stop).gradient);
  const Vector gf = kernels::flatten(meta_gradient(k, d.samples, d.samples, d.dt, full).gradient);
  EXPECT_LE((gs - gf).norm(), 1e-8 * gs.norm());
}

INSTANTIATE_TEST_SUITE_P(Formulations, MetaGradientFd, ::testing::Values(Formulation::Vector, Formulation::Scalar));

TEST(MetaStep, ZeroLearningRateLeavesModel) {
  const KernelModel k = KernelModel::random(Formulation::Vector, 3, tiny_arch(3), 41);
  MetaConfig cfg;
  cfg.learning_rate = 0.0;
  const MetaStepResult r = meta_step(k, random_dataset(40, 43), cfg, 45);
  EXPECT_EQ(kernels::flatten(r.model.networks()), kernels::flatten(k.networks()));
  EXPECT_EQ(r.cost, r.pre_cost);
}

TEST(MetaStep, KeepsSpectralBound) {
  Architecture arch = tiny_arch(3);
  arch.sigma_bar = 0.5;
  KernelModel k = KernelModel::random(Formulation::Scalar, 3, arch, 47);
  MetaConfig cfg;
  cfg.learning_rate = 5.0;
  const ConditionDataset d = random_dataset(40, 49);
  for (std::uint64_t s = 0; s < 5; ++s) {
    k = meta_step(k, d, cfg, s).model;
    for (const auto& norms : kernels::layer_norms(k))
      for (double v : norms) EXPECT_LE(v, arch.sigma_bar + 1e-6);
  }
}

TEST(MetaStep, LineSearchNeverIncreasesCost) {
  const KernelModel teacher = KernelModel::random(Formulation::Vector, 3, tiny_arch(3), 51);
  const auto sets = teacher_sets(teacher, 1, 60, 53);
  KernelModel k = KernelModel::random(Formulation::Vector, 3, tiny_arch(3), 55);
  MetaConfig cfg;
  cfg.full_batch = true;
  cfg.line_search = true;
  cfg.learning_rate = 0.5;
  OptimizerState opt(cfg);
  double prev = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 30; ++i) {
    const MetaStepResult r = meta_step(k, sets[0], cfg, 0, &opt);
    EXPECT_LE(r.cost, r.pre_cost);
    EXPECT_LE(r.pre_cost, prev * (1.0 + 1e-12));
    prev = r.cost;
    k = r.model;
  }
}

TEST(MetaStep, ConstantKernelHasNothingToTrain) {
  const MetaStepResult r = meta_step(KernelModel::constant(3), random_dataset(30, 57), MetaConfig{}, 1);
  EXPECT_EQ(r.cost, r.pre_cost);
  EXPECT_EQ(r.step, 0.0);
}

TEST(Optimizer, AdamFirstStepIsSignLike) {
  MetaConfig cfg;
  cfg.optimizer = OptimizerKind::Adam;
  OptimizerState opt(cfg);
  const Vector g = (Vector(3) << 2.0, -0.5, 1e-3).finished();
  const Vector d = opt.direction(g, cfg);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(d(i), g(i) > 0 ? 1.0 : -1.0, 1e-4);
  MetaConfig mc;
  mc.optimizer = OptimizerKind::Momentum;
  mc.momentum = 0.5;
  OptimizerState mom(mc);
  (void)mom.direction(g, mc);
  EXPECT_LE((mom.direction(g, mc) - 1.5 * g).norm(), 1e-15);
}

TEST(MetaTrain, DeterministicCurves) {
  const KernelModel teacher = KernelModel::random(Formulation::Vector, 3, tiny_arch(3), 59);
  const auto sets = teacher_sets(teacher, 3, 50, 61);
  MetaConfig cfg;
  cfg.max_epochs = 8;
  cfg.learning_rate = 0.05;
  const KernelModel init = initial_model(Formulation::Vector, sets, tiny_arch(3), 63);
  const MetaTrainResult a = meta_train(sets, {}, init, cfg);
  const MetaTrainResult b = meta_train(sets, {}, init, cfg);
  ASSERT_EQ(a.curve.size(), b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i) {
    EXPECT_EQ(a.curve[i].train_cost, b.curve[i].train_cost);
    EXPECT_EQ(a.curve[i].val_cost, b.curve[i].val_cost);
  }
  EXPECT_EQ(kernels::flatten(a.model.networks()), kernels::flatten(b.model.networks()));
}

TEST(MetaTrain, ReducesTeacherCost) {
  const KernelModel teacher = KernelModel::random(Formulation::Vector, 3, tiny_arch(3), 65);
  const auto sets = teacher_sets(teacher, 3, 80, 67);
  MetaConfig cfg;
  cfg.max_epochs = 60;
  cfg.optimizer = OptimizerKind::Adam;
  cfg.learning_rate = 1e-2;
  const KernelModel init = initial_model(Formulation::Vector, sets, tiny_arch(3), 69);
  const MetaTrainResult r = meta_train(sets, {}, init, cfg);
  EXPECT_LT(r.curve[static_cast<std::size_t>(r.best_epoch)].val_cost, 0.2 * r.curve.front().val_cost);
  for (const auto& norms : kernels::layer_norms(r.model))
    for (double v : norms) EXPECT_LE(v, 2.0 + 1e-6);
}

TEST(MetaTrain, CountsCostIncreases) {
  const KernelModel teacher = KernelModel::random(Formulation::Vector, 3, tiny_arch(3), 77);
  const auto sets = teacher_sets(teacher, 3, 60, 79);
  MetaConfig cfg;
  cfg.max_epochs = 20;
  cfg.patience = 100;
  cfg.learning_rate = 0.05;
  const MetaTrainResult r = meta_train(sets, {}, initial_model(Formulation::Vector, sets, tiny_arch(3), 81), cfg);
  int rises = 0;
  for (std::size_t e = 1; e < r.curve.size(); ++e) rises += r.curve[e].train_cost > r.curve[e - 1].train_cost;
  EXPECT_EQ(r.cost_increases, rises);

  MetaConfig mono = cfg;
  mono.full_batch = true;
  mono.line_search = true;
  const auto one = std::vector<ConditionDataset>{sets[0]};
  EXPECT_EQ(meta_train(one, {}, initial_model(Formulation::Vector, one, tiny_arch(3), 83), mono).cost_increases, 0);
}

TEST(MetaTrain, PatienceStopsFlatCurve) {
  const auto sets = teacher_sets(KernelModel::random(Formulation::Vector, 3, tiny_arch(2), 71), 2, 40, 73);
  MetaConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.patience = 3;
  cfg.max_epochs = 50;
  const MetaTrainResult r = meta_train(sets, {}, initial_model(Formulation::Vector, sets, tiny_arch(2), 75), cfg);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.curve.size(), 4u);
}

TEST(MetaTrain, CurveCsv) {
  const auto path = std::filesystem::temp_directory_path() / "metaadapt_curve.csv";
  save_training_curve({{0, 1.5, 2.5}, {1, 0.25, 0.125}}, path);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "epoch,train_cost,val_cost");
  EXPECT_EQ(row, "0,1.5,2.5");
  std::filesystem::remove(path);
}

TEST(MetaConfig, ParsesAndValidates) {
  EXPECT_EQ(parse_gradient_policy("stop-gradient"), GradientPolicy::StopGradient);
  EXPECT_EQ(parse_gradient_policy("full"), GradientPolicy::Full);
  EXPECT_EQ(parse_optimizer("adam"), OptimizerKind::Adam);
  EXPECT_THROW((void)parse_optimizer("lbfgs"), Error);
  MetaConfig cfg;
  cfg.adapt_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Dataset, CsvRoundTripAndDecimate) {
  ConditionDataset d = random_dataset(25, 77);
  d.label = "wind_1.3";
  d.wind_speed = 1.3;
  const auto stem = std::filesystem::temp_directory_path() / "metaadapt_ds";
  save_dataset(d, stem);
  const ConditionDataset back = load_dataset(stem);
  std::filesystem::remove(stem.string() + ".csv");
  std::filesystem::remove(stem.string() + ".json");
  ASSERT_EQ(back.size(), d.size());
  EXPECT_EQ(back.label, d.label);
  EXPECT_EQ(back.wind_speed, 1.3);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.samples[i].q, d.samples[i].q);
    EXPECT_EQ(back.samples[i].f, d.samples[i].f);
  }
  const ConditionDataset dec = decimate(d, 10);
  EXPECT_EQ(dec.size(), 3u);
  EXPECT_NEAR(dec.dt, 0.1, 1e-15);
  EXPECT_EQ(dec.samples[2].q, d.samples[20].q);
}
