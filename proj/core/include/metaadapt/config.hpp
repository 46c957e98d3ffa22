#pragma once

// Flat `key = value` run configuration. Lines starting with '#' are comments;
// vectors are comma separated; wind schedules are `t:speed,t:speed,...`.
// Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "metaadapt/controller.hpp"
#include "metaadapt/kernel_model.hpp"
#include "metaadapt/metalearn.hpp"
#include "metaadapt/trajectory.hpp"
#include "metaadapt/wind.hpp"

namespace metaadapt::harness {

using SpeedSchedule = std::vector<std::pair<double, double>>;  // (start time, wind speed)

struct ScenarioSettings {
  SpeedSchedule schedule;
  double duration = 0.0;
};

struct RunConfig {
  double mass = 1.47;
  double gravity = 9.81;

  Vector lambda_diag = Vector::Constant(3, 0.25);  // Λ
  Vector k_diag = Vector::Constant(3, 32.0);       // K
  double forgetting = 2.0;                         // λ
  double regularization = 1e-3;                    // γ
  double filter_tc = 0.2;
  double pbar_cap = 1e8;
  double eig_floor = 1e-10;

  double dt = 0.01;
  double noise_sigma = 0.05;

  TrajectoryParams trajectory;
  dynamics::WindFamily wind;

  ScenarioSettings hover{{{0.0, 2.5}, {15.0, 4.3}, {25.0, 6.2}}, 35.0};
  ScenarioSettings randomwalk{{{0.0, 2.5}, {20.0, 4.3}, {40.0, 6.2}}, 60.0};
  ScenarioSettings fig8{{{0.0, 4.3}}, 60.0};

  std::vector<double> collect_speeds{0.0, 1.3, 2.5, 3.7, 4.9};
  Vector collect_lambda_diag = Vector::Constant(3, 2.0);
  Vector collect_k_diag = Vector::Constant(3, 4.0);
  double collect_forgetting = 0.5;
  double collect_regularization = 0.01;
  double collect_duration = 120.0;
  std::size_t train_stride = 10;  // decimation of collected data before meta-training
  std::vector<double> validation_speeds{4.3};
  double validation_duration = 30.0;

  kernels::Architecture architecture;
  meta::MetaConfig meta;

  std::size_t eval_seeds = 10;
  std::uint64_t seed = 1;

  [[nodiscard]] adapt::Gains gains() const;
  /// Gains of the data-collection flights; filter and covariance limits are shared.
  [[nodiscard]] adapt::Gains collect_gains() const;
  [[nodiscard]] const ScenarioSettings& scenario(TrajectoryKind kind) const;
  void validate() const;
};

/// Applies one `key = value` assignment.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

[[nodiscard]] RunConfig parse_config(const std::string& text, RunConfig base = {});
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

/// Every key with its current value, one per line, in parse_config syntax.
[[nodiscard]] std::string dump_config(const RunConfig& cfg);

[[nodiscard]] SpeedSchedule parse_schedule(const std::string& s);

}  // namespace metaadapt::harness
