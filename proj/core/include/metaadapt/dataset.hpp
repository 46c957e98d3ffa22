#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "metaadapt/linalg.hpp"

namespace metaadapt {

/// One (q, q̇, f) measurement.
struct Sample {
  double t = 0.0;
  Vector q;
  Vector qdot;
  Vector f;
};

/// Measurements collected under one fixed wind condition.
struct ConditionDataset {
  std::string label;
  double wind_speed = 0.0;
  double dt = 0.01;
  std::vector<Sample> samples;

  [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
  void validate() const;
};

/// Raw network inputs, one column (q, q̇) per sample: 2n × N.
[[nodiscard]] Matrix stacked_inputs(std::span<const Sample> samples);
/// Forces, one column per sample: n × N.
[[nodiscard]] Matrix stacked_forces(std::span<const Sample> samples);

/// CSV `t,qx,qy,qz,vx,vy,vz,fx,fy,fz` plus a JSON sidecar with the label,
/// wind speed and sample period. Paths are `<stem>.csv` and `<stem>.json`.
void save_dataset(const ConditionDataset& d, const std::filesystem::path& stem);
[[nodiscard]] ConditionDataset load_dataset(const std::filesystem::path& stem);

/// Every `stride`-th sample, preserving order; dt is scaled accordingly.
[[nodiscard]] ConditionDataset decimate(const ConditionDataset& d, std::size_t stride);

}  // namespace metaadapt
