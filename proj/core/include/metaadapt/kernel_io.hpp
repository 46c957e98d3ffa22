#pragma once

#include <filesystem>
#include <string>

#include "metaadapt/kernel_model.hpp"

namespace metaadapt::kernels {

inline constexpr int kModelFormatVersion = 1;

/// Self-describing JSON: format tag and version, formulation, n, m, layer
/// widths, σ̄, power-iteration count, standardization and every weight.
/// Doubles are written in shortest round-trip form, so save → load is
/// bit-exact.
[[nodiscard]] std::string model_to_json(const KernelModel& model);
[[nodiscard]] KernelModel model_from_json(const std::string& text);

void save_model(const KernelModel& model, const std::filesystem::path& path);
[[nodiscard]] KernelModel load_model(const std::filesystem::path& path);

}  // namespace metaadapt::kernels
