// metaadapt: collect data, meta-train kernels, fly scenarios, compare kernels
// and check the convergence envelope.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "metaadapt/bound.hpp"
#include "metaadapt/config.hpp"
#include "metaadapt/episode_io.hpp"
#include "metaadapt/errors.hpp"
#include "metaadapt/kernel_io.hpp"
#include "metaadapt/rng.hpp"
#include "metaadapt/scenario.hpp"

namespace fs = std::filesystem;
using namespace metaadapt;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = "out";
  std::vector<std::string> overrides;

  [[nodiscard]] harness::RunConfig load() const {
    harness::RunConfig cfg = config.empty() ? harness::RunConfig{} : harness::load_config(config);
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      require(eq != std::string::npos, ErrorKind::BadParams, "--set expects key=value, got '" + o + "'");
      harness::apply_setting(cfg, o.substr(0, eq), o.substr(eq + 1));
    }
    if (seed) cfg.seed = *seed;
    cfg.validate();
    return cfg;
  }

  [[nodiscard]] fs::path out() const {
    fs::create_directories(out_dir);
    return out_dir;
  }
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "Flat key = value config file")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "Master seed");
  app->add_option("--out-dir", c.out_dir, "Output directory")->capture_default_str();
  app->add_option("--set", c.overrides, "Override one config key (key=value); repeatable");
}

std::string data_stem(const fs::path& dir, const std::string& prefix, double speed) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s_%.1f", prefix.c_str(), speed);
  return (dir / buf).string();
}

std::vector<ConditionDataset> load_sets(const fs::path& dir, const std::string& prefix,
                                        const std::vector<double>& speeds) {
  std::vector<ConditionDataset> out;
  for (double s : speeds) out.push_back(load_dataset(data_stem(dir, prefix, s)));
  return out;
}

kernels::KernelModel resolve_model(const std::string& kernel, const std::string& model_path, const fs::path& out) {
  const auto f = kernels::parse_formulation(kernel);
  if (f == kernels::Formulation::Constant) return kernels::KernelModel::constant(3);
  const fs::path path = model_path.empty() ? out / ("model_" + kernel + ".json") : fs::path(model_path);
  return kernels::load_model(path);
}

int cmd_collect(const Common& c) {
  const auto cfg = c.load();
  const fs::path dir = c.out() / "data";
  fs::create_directories(dir);
  const dynamics::QuadrotorPointMass plant(cfg.mass, cfg.gravity);
  const auto train = harness::collect_training_data(plant, cfg.collect_speeds, cfg.collect_duration, cfg, cfg.seed);
  for (const auto& d : train) save_dataset(d, data_stem(dir, "train", d.wind_speed));
  const auto val = harness::collect_training_data(plant, cfg.validation_speeds, cfg.validation_duration, cfg,
                                                  mix_seed(cfg.seed, 0xBA1));
  for (const auto& d : val) save_dataset(d, data_stem(dir, "val", d.wind_speed));
  std::printf("collected %zu training and %zu validation datasets in %s\n", train.size(), val.size(),
              dir.string().c_str());
  return 0;
}

int cmd_train(const Common& c, const std::string& kernel, const std::string& data_dir) {
  const auto cfg = c.load();
  const auto f = kernels::parse_formulation(kernel);
  require(f != kernels::Formulation::Constant, ErrorKind::BadParams, "the constant kernel has nothing to train");
  const fs::path out = c.out();
  const fs::path dir = data_dir.empty() ? out / "data" : fs::path(data_dir);
  const auto train = load_sets(dir, "train", cfg.collect_speeds);
  const auto val = load_sets(dir, "val", cfg.validation_speeds);
  const auto result = harness::train_kernel(f, train, val, cfg);
  kernels::save_model(result.model, out / ("model_" + kernel + ".json"));
  meta::save_training_curve(result.curve, out / ("curve_" + kernel + ".csv"));
  std::printf("trained %s kernel: %zu epochs, best epoch %d, val cost %.6g -> %.6g%s, %d epochs raised the train cost\n",
              kernel.c_str(), result.curve.size() - 1, result.best_epoch, result.curve.front().val_cost,
              result.curve.at(static_cast<std::size_t>(result.best_epoch)).val_cost,
              result.converged ? " (converged)" : "", result.cost_increases);
  return 0;
}

int cmd_fly(const Common& c, const std::string& scenario, const std::string& kernel, const std::string& model_path) {
  const auto cfg = c.load();
  const fs::path out = c.out();
  const auto kind = harness::parse_trajectory(scenario);
  const auto model = resolve_model(kernel, model_path, out);
  const auto result = harness::run_scenario(kind, model, cfg, cfg.seed);
  const auto bound = adapt::theorem_bound(cfg.gains(), result.log);
  const std::string stem = scenario + "_" + kernel;
  harness::write_episode_csv(result.log, out / (stem + ".csv"));
  harness::write_episode_summary({result.metrics, cfg.gains(), harness::dump_config(cfg), &bound},
                                 out / (stem + ".json"));
  harness::write_prediction_histogram(result.log, 40, out / (stem + "_prederr_hist.csv"));
  const auto& m = result.metrics;
  std::printf("%s/%s seed %llu: pred err mean %.4f max %.4f N, rms |s| %.4f m/s, rms |q~| %.4f m\n",
              scenario.c_str(), kernel.c_str(), static_cast<unsigned long long>(cfg.seed), m.mean_prediction_error,
              m.max_prediction_error, m.rms_s, m.rms_q_err);
  return 0;
}

int cmd_eval(const Common& c, const std::string& vector_model, const std::string& scalar_model) {
  const auto cfg = c.load();
  const fs::path out = c.out();
  std::vector<std::pair<std::string, kernels::KernelModel>> models{
      {"constant", kernels::KernelModel::constant(3)},
      {"vector", resolve_model("vector", vector_model, out)},
      {"scalar", resolve_model("scalar", scalar_model, out)}};
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < cfg.eval_seeds; ++i) seeds.push_back(cfg.seed + i);
  const auto table = harness::compare_kernels(
      {harness::TrajectoryKind::Hover, harness::TrajectoryKind::RandomWalk, harness::TrajectoryKind::Figure8}, models,
      seeds, cfg);
  harness::write_comparison_csv(table, out / "comparison.csv");
  harness::write_runs_csv(table, out / "comparison_runs.csv");
  std::cout << harness::format_comparison(table);
  return 0;
}

int cmd_check_bound(const Common& c, const std::string& disturbance, const std::string& kernel,
                    const std::string& model_path, double duration, std::optional<double> dt) {
  auto cfg = c.load();
  if (dt) cfg.dt = *dt;
  const fs::path out = c.out();
  const auto model = resolve_model(kernel, model_path, out);
  const dynamics::QuadrotorPointMass plant(cfg.mass, cfg.gravity);
  harness::TrajectoryParams tp = cfg.trajectory;
  const harness::HoverTrajectory hover(tp.center);

  std::unique_ptr<dynamics::DisturbanceField> field;
  if (disturbance == "none") {
    field = std::make_unique<dynamics::ZeroDisturbance>(3);
  } else if (disturbance == "realizable") {
    Rng rng(mix_seed(cfg.seed, 0xA0));
    Vector a0(model.coefficient_count());
    for (Eigen::Index i = 0; i < a0.size(); ++i) a0(i) = rng.uniform(-1.0, 1.0);
    field = std::make_unique<adapt::KernelField>(model, a0);
  } else if (disturbance == "wind") {
    field = std::make_unique<dynamics::WindField>(harness::scenario_schedule(harness::TrajectoryKind::Hover, cfg));
  } else {
    fail(ErrorKind::BadParams, "unknown disturbance '" + disturbance + "' (expected none|realizable|wind)");
  }
  adapt::RunOptions opts;
  opts.noise_sigma = cfg.noise_sigma;
  opts.initial_offset = Vector::Constant(3, 0.3);
  const auto log = adapt::run_controller(plant, model, cfg.gains(), hover, *field, duration, cfg.dt, cfg.seed, opts);
  const auto report = adapt::theorem_bound(cfg.gains(), log);
  const std::string stem = "bound_" + disturbance + "_" + kernel;
  harness::write_bound_csv(report, out / (stem + ".csv"));
  auto metrics = harness::compute_metrics(log);
  metrics.scenario = "check-bound/" + disturbance;
  metrics.kernel = kernel;
  harness::write_episode_summary({metrics, cfg.gains(), harness::dump_config(cfg), &report}, out / (stem + ".json"));
  const auto& k = report.constants;
  std::printf("lambda_con %.6g  d_bar %.6g  kappa %.6g  ball radius %.6g\n", k.lambda_con, k.d_bar, k.kappa,
              k.ball_radius);
  std::printf("violations %zu / %zu steps (%.4f%%)\n", report.violations, report.t.size(),
              100.0 * report.violation_fraction);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-learned kernels with regularized composite adaptation"};
  app.require_subcommand(1);

  Common common;
  std::string kernel = "constant", scenario = "hover", model_path, data_dir, vector_model, scalar_model;
  std::string disturbance = "realizable";
  double duration = 30.0;
  std::optional<double> dt;

  auto* collect = app.add_subcommand("collect", "Fly the data-collection campaign and write datasets");
  add_common(collect, common);

  auto* train = app.add_subcommand("train", "Meta-train a kernel model from collected datasets");
  add_common(train, common);
  train->add_option("--kernel", kernel, "vector|scalar")->required();
  train->add_option("--data-dir", data_dir, "Dataset directory (default <out-dir>/data)");

  auto* fly = app.add_subcommand("fly", "Run one scenario with one kernel");
  add_common(fly, common);
  fly->add_option("--scenario", scenario, "hover|randomwalk|fig8")->capture_default_str();
  fly->add_option("--kernel", kernel, "constant|vector|scalar")->capture_default_str();
  fly->add_option("--model", model_path, "Model file (default <out-dir>/model_<kernel>.json)");

  auto* eval = app.add_subcommand("eval", "Compare the three kernels on the three scenarios");
  add_common(eval, common);
  eval->add_option("--vector-model", vector_model, "Vector model file");
  eval->add_option("--scalar-model", scalar_model, "Scalar model file");

  auto* bound = app.add_subcommand("check-bound", "Evaluate the exponential envelope on a hover run");
  add_common(bound, common);
  bound->add_option("--disturbance", disturbance, "none|realizable|wind")->capture_default_str();
  bound->add_option("--kernel", kernel, "constant|vector|scalar")->capture_default_str();
  bound->add_option("--model", model_path, "Model file");
  bound->add_option("--duration", duration, "Run length (s)")->capture_default_str();
  bound->add_option("--dt", dt, "Override the control period (s)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "error: kind=Usage msg=%s\n", e.what());
    return 2;
  }

  try {
    if (*collect) return cmd_collect(common);
    if (*train) return cmd_train(common, kernel, data_dir);
    if (*fly) return cmd_fly(common, scenario, kernel, model_path);
    if (*eval) return cmd_eval(common, vector_model, scalar_model);
    if (*bound) return cmd_check_bound(common, disturbance, kernel, model_path, duration, dt);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: kind=%s msg=%s\n", std::string(to_string(e.kind())).c_str(), e.message().c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: kind=Internal msg=%s\n", e.what());
    return 1;
  }
  return 0;
}
