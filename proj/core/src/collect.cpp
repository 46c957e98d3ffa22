#include "metaadapt/errors.hpp"
#include "metaadapt/rng.hpp"
#include "metaadapt/scenario.hpp"

#include <cstdio>

namespace metaadapt::harness {

std::vector<ConditionDataset> collect_training_data(const dynamics::PlantModel& plant,
                                                    const std::vector<double>& speeds, double duration,
                                                    const RunConfig& cfg, std::uint64_t seed) {
  require(!speeds.empty() && duration > 0.0, ErrorKind::BadParams, "collection needs speeds and a duration");
  const auto model = kernels::KernelModel::constant(plant.dof());
  std::vector<ConditionDataset> out;
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    TrajectoryParams p = cfg.trajectory;
    p.duration = duration;
    const RandomWalkTrajectory trajectory(p, mix_seed(seed, 0xDA7A + i));
    const dynamics::WindField field(
        dynamics::WindSchedule::constant(dynamics::WindCondition::from_speed(speeds[i], cfg.wind), duration));
    adapt::RunOptions opts;
    opts.noise_sigma = cfg.noise_sigma;
    const adapt::EpisodeLog log =
        adapt::run_controller(plant, model, cfg.collect_gains(), trajectory, field, duration, cfg.dt, mix_seed(seed, i), opts);

    char label[32];
    std::snprintf(label, sizeof label, "wind_%.1f", speeds[i]);
    ConditionDataset d{label, speeds[i], cfg.dt, {}};
    d.samples.reserve(log.steps.size());
    for (const auto& r : log.steps) d.samples.push_back({r.t, r.q, r.qdot, r.f});
    out.push_back(std::move(d));
  }
  return out;
}

meta::MetaTrainResult train_kernel(kernels::Formulation f, const std::vector<ConditionDataset>& train,
                                   const std::vector<ConditionDataset>& validation, const RunConfig& cfg) {
  auto thin = [&](const std::vector<ConditionDataset>& in) {
    std::vector<ConditionDataset> out;
    for (const auto& d : in) out.push_back(decimate(d, cfg.train_stride));
    return out;
  };
  const auto train_thin = thin(train);
  const auto initial = meta::initial_model(f, train_thin, cfg.architecture, cfg.meta.seed);
  return meta::meta_train(train_thin, thin(validation), initial, cfg.meta);
}

}  // namespace metaadapt::harness
