#pragma once

// Meta-training of the kernel weights Θ. Each visit to a condition dataset
// splits it into an adaptation part (where a is solved exactly by least
// squares) and a training part (where the fitted a is scored), then takes a
// gradient step on Θ and re-applies spectral normalization.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "metaadapt/dataset.hpp"
#include "metaadapt/kernel_model.hpp"

namespace metaadapt::meta {

/// How the dependence of a_LS on Θ enters the gradient.
enum class GradientPolicy {
  StopGradient,  // a treated as constant within a step
  Full,          // differentiate through the ridge-regularized closed form
};

enum class OptimizerKind { Sgd, Momentum, Adam };

struct MetaConfig {
  double learning_rate = 5e-3;  // β
  int max_epochs = 500;
  int patience = 20;
  double tolerance = 1e-4;       // relative improvement over `patience` epochs
  double adapt_fraction = 0.2;   // K = max(2·dim(a), round(fraction·L))
  std::uint64_t seed = 1;
  double ridge = 0.0;
  double fallback_ridge = 1e-9;
  GradientPolicy gradient_policy = GradientPolicy::StopGradient;
  bool full_batch = false;  // D^a = D^Θ = D
  OptimizerKind optimizer = OptimizerKind::Sgd;
  double momentum = 0.9;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  bool line_search = false;  // backtrack β until the step does not increase the cost
  int line_search_halvings = 30;
  double line_search_growth = 1.5;
  double validation_fraction = 0.2;  // leading segment used to fit a during validation

  void validate() const;
};

[[nodiscard]] GradientPolicy parse_gradient_policy(const std::string& s);
[[nodiscard]] OptimizerKind parse_optimizer(const std::string& s);

/// Disjoint, covering index sets D^a (size K) and D^Θ.
struct MetaSplit {
  std::vector<std::size_t> adapt;
  std::vector<std::size_t> train;
};

[[nodiscard]] std::size_t adaptation_size(const kernels::KernelModel& model, std::size_t dataset_size,
                                          const MetaConfig& cfg);
/// Uniform random split via a partial Fisher-Yates shuffle; both index lists
/// are returned sorted. In full-batch mode both sets are the whole dataset.
[[nodiscard]] MetaSplit draw_split(std::size_t dataset_size, std::size_t adapt_size, bool full_batch,
                                   std::uint64_t seed);
[[nodiscard]] std::vector<Sample> gather(const ConditionDataset& d, const std::vector<std::size_t>& idx);

/// Least-squares coefficients on a sample subset.
[[nodiscard]] Vector a_ls(const kernels::KernelModel& model, std::span<const Sample> subset, const MetaConfig& cfg = {});

/// J = Δt · Σ ‖f − φ a‖².
[[nodiscard]] double cost_j(const kernels::KernelModel& model, const Vector& a, std::span<const Sample> subset, double dt);

struct MetaGradient {
  double cost = 0.0;  // J(a_LS(Θ, D^a), Θ, D^Θ)
  Vector a;
  double ridge = 0.0;
  kernels::Parameters gradient;
};

/// Cost and ∂J/∂Θ of the split pipeline under the configured policy.
[[nodiscard]] MetaGradient meta_gradient(const kernels::KernelModel& model, std::span<const Sample> adapt,
                                         std::span<const Sample> train, double dt, const MetaConfig& cfg);

/// J(a_LS(Θ, D^a), Θ, D^Θ) without gradients.
[[nodiscard]] double pipeline_cost(const kernels::KernelModel& model, std::span<const Sample> adapt,
                                   std::span<const Sample> train, double dt, const MetaConfig& cfg);

/// Persistent optimizer state across meta steps.
class OptimizerState {
 public:
  explicit OptimizerState(const MetaConfig& cfg) : kind_(cfg.optimizer) {}

  /// Descent direction (to be scaled by β and subtracted) from a gradient.
  [[nodiscard]] Vector direction(const Vector& grad, const MetaConfig& cfg);

  [[nodiscard]] double step_scale() const noexcept { return step_scale_; }
  void set_step_scale(double s) noexcept { step_scale_ = s; }

 private:
  OptimizerKind kind_;
  Vector first_;
  Vector second_;
  long steps_ = 0;
  double step_scale_ = 1.0;
};

struct MetaStepResult {
  kernels::KernelModel model;
  double cost = 0.0;      // post-step pipeline cost on the same split
  double pre_cost = 0.0;  // cost before the step
  double step = 0.0;      // effective β actually applied (0 if rejected)
  MetaSplit split;
};

/// One meta-training update on one condition dataset.
[[nodiscard]] MetaStepResult meta_step(const kernels::KernelModel& model, const ConditionDataset& dataset,
                                       const MetaConfig& cfg, std::uint64_t seed, OptimizerState* optimizer = nullptr);

/// Fit a on the leading `fraction` of a contiguous trajectory and score the
/// remainder: J per remaining sample.
[[nodiscard]] double validation_cost(const kernels::KernelModel& model, const ConditionDataset& d, double fraction,
                                     const MetaConfig& cfg = {});

/// Same protocol, reported as prediction RMSE ‖f − φa‖ over the remainder.
[[nodiscard]] double validation_rmse(const kernels::KernelModel& model, const ConditionDataset& d, double fraction,
                                     const MetaConfig& cfg = {});

struct EpochRecord {
  int epoch = 0;
  double train_cost = 0.0;
  double val_cost = 0.0;
};

struct MetaTrainResult {
  kernels::KernelModel model;  // best by validation cost
  std::vector<EpochRecord> curve;
  int best_epoch = 0;
  bool converged = false;  // stopped on the patience criterion rather than max epochs
  int cost_increases = 0;  // epochs whose training cost exceeded the previous epoch's
};

/// Trains from `initial` (already standardized). If `validation` is empty the
/// training datasets are scored with the validation protocol instead.
[[nodiscard]] MetaTrainResult meta_train(const std::vector<ConditionDataset>& datasets,
                                         const std::vector<ConditionDataset>& validation,
                                         const kernels::KernelModel& initial, const MetaConfig& cfg);

/// Seeded random Θ₀ with input standardization fitted to all training data.
[[nodiscard]] kernels::KernelModel initial_model(kernels::Formulation f, const std::vector<ConditionDataset>& datasets,
                                                 const kernels::Architecture& arch, std::uint64_t seed);

/// CSV `epoch,train_cost,val_cost`.
void save_training_curve(const std::vector<EpochRecord>& curve, const std::filesystem::path& path);

/// Synthetic datasets f = φ_teacher(q, q̇)·a_c at states drawn uniformly from
/// the box [lo, hi] ⊂ ℝ²ⁿ; one dataset per coefficient vector.
[[nodiscard]] std::vector<ConditionDataset> teacher_datasets(const kernels::KernelModel& teacher,
                                                             std::span<const Vector> coefficients,
                                                             std::size_t samples, double dt, const Vector& lo,
                                                             const Vector& hi, std::uint64_t seed);

}  // namespace metaadapt::meta
