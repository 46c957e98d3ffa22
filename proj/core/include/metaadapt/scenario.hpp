#pragma once

// Closed-loop experiments: the hover, random-walk and figure-8 scenarios,
// their error metrics, and the kernel comparison table.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "metaadapt/config.hpp"
#include "metaadapt/controller.hpp"
#include "metaadapt/dataset.hpp"

namespace metaadapt::harness {

struct MetricsReport {
  std::string scenario;
  std::string kernel;
  std::uint64_t seed = 0;
  double mean_prediction_error = 0.0;  // N, mean ‖φâ − f‖
  double max_prediction_error = 0.0;
  double rms_s = 0.0;      // m/s
  double rms_q_err = 0.0;  // m
};

[[nodiscard]] MetricsReport compute_metrics(const adapt::EpisodeLog& log);

struct ScenarioResult {
  adapt::EpisodeLog log;
  MetricsReport metrics;
};

[[nodiscard]] dynamics::WindSchedule scenario_schedule(TrajectoryKind kind, const RunConfig& cfg);

/// The desired trajectory depends only on (kind, cfg, seed), never on the
/// kernel, so every controller sees identical setpoints.
[[nodiscard]] std::unique_ptr<Trajectory> scenario_trajectory(TrajectoryKind kind, const RunConfig& cfg,
                                                              std::uint64_t seed);

[[nodiscard]] ScenarioResult run_scenario(TrajectoryKind kind, const kernels::KernelModel& model,
                                          const RunConfig& cfg, std::uint64_t seed);

struct ComparisonRow {
  std::string scenario;
  std::string kernel;
  std::size_t seeds = 0;
  double pred_mean = 0.0, pred_std = 0.0;
  double s_mean = 0.0, s_std = 0.0;
  double q_mean = 0.0, q_std = 0.0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  std::vector<MetricsReport> runs;

  [[nodiscard]] const ComparisonRow& row(const std::string& scenario, const std::string& kernel) const;
};

/// Runs every (scenario, kernel, seed) triple in a fixed order. Dispersion is
/// the sample standard deviation over seeds.
[[nodiscard]] ComparisonTable compare_kernels(const std::vector<TrajectoryKind>& scenarios,
                                              const std::vector<std::pair<std::string, kernels::KernelModel>>& kernels,
                                              const std::vector<std::uint64_t>& seeds, const RunConfig& cfg);

void write_comparison_csv(const ComparisonTable& table, const std::filesystem::path& path);
void write_runs_csv(const ComparisonTable& table, const std::filesystem::path& path);
[[nodiscard]] std::string format_comparison(const ComparisonTable& table);

/// Binned ‖φâ − f‖ as CSV `bin_lo,bin_hi,count`; the top bin is closed.
void write_prediction_histogram(const adapt::EpisodeLog& log, std::size_t bins, const std::filesystem::path& path);

/// Flies a random walk under each constant wind speed with the
/// Constant-kernel controller and records (q, q̇, f) at the control rate,
/// f being the ground-truth disturbance.
[[nodiscard]] std::vector<ConditionDataset> collect_training_data(const dynamics::PlantModel& plant,
                                                                  const std::vector<double>& speeds, double duration,
                                                                  const RunConfig& cfg, std::uint64_t seed);

/// Decimates the datasets by `train_stride`, draws Θ₀ from `cfg.meta.seed`
/// and meta-trains a model of formulation `f`.
[[nodiscard]] meta::MetaTrainResult train_kernel(kernels::Formulation f, const std::vector<ConditionDataset>& train,
                                                 const std::vector<ConditionDataset>& validation,
                                                 const RunConfig& cfg);

}  // namespace metaadapt::harness
