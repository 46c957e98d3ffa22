#pragma once

#include <filesystem>
#include <string>

#include "metaadapt/bound.hpp"
#include "metaadapt/controller.hpp"
#include "metaadapt/scenario.hpp"

namespace metaadapt::harness {

/// One row per step. The column list is repeated in a leading `#` comment.
void write_episode_csv(const adapt::EpisodeLog& log, const std::filesystem::path& path);

struct EpisodeSummary {
  MetricsReport metrics;
  adapt::Gains gains;
  std::string config;  // dump_config text
  const adapt::BoundReport* bound = nullptr;
};

void write_episode_summary(const EpisodeSummary& summary, const std::filesystem::path& path);
void write_bound_csv(const adapt::BoundReport& report, const std::filesystem::path& path);

}  // namespace metaadapt::harness
