#include "metaadapt/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "metaadapt/errors.hpp"
#include "metaadapt/rng.hpp"

namespace metaadapt::harness {

MetricsReport compute_metrics(const adapt::EpisodeLog& log) {
  require(!log.steps.empty(), ErrorKind::BadParams, "compute_metrics: empty log");
  MetricsReport m;
  m.seed = log.seed;
  double pred = 0.0, s2 = 0.0, q2 = 0.0;
  for (const auto& r : log.steps) {
    const double e = r.pred_error.norm();
    pred += e;
    m.max_prediction_error = std::max(m.max_prediction_error, e);
    s2 += r.s.squaredNorm();
    q2 += (r.q - r.q_d).squaredNorm();
  }
  const auto N = static_cast<double>(log.steps.size());
  m.mean_prediction_error = pred / N;
  m.rms_s = std::sqrt(s2 / N);
  m.rms_q_err = std::sqrt(q2 / N);
  return m;
}

dynamics::WindSchedule scenario_schedule(TrajectoryKind kind, const RunConfig& cfg) {
  const auto& s = cfg.scenario(kind);
  return dynamics::WindSchedule::from_speeds(s.schedule, s.duration, cfg.wind);
}

std::unique_ptr<Trajectory> scenario_trajectory(TrajectoryKind kind, const RunConfig& cfg, std::uint64_t seed) {
  TrajectoryParams p = cfg.trajectory;
  p.duration = cfg.scenario(kind).duration;
  return gen_trajectory(kind, p, mix_seed(seed, 0x7A));
}

ScenarioResult run_scenario(TrajectoryKind kind, const kernels::KernelModel& model, const RunConfig& cfg,
                            std::uint64_t seed) {
  cfg.validate();
  const dynamics::QuadrotorPointMass plant(cfg.mass, cfg.gravity);
  const auto trajectory = scenario_trajectory(kind, cfg, seed);
  const dynamics::WindField field(scenario_schedule(kind, cfg));
  adapt::RunOptions opts;
  opts.noise_sigma = cfg.noise_sigma;
  ScenarioResult out{adapt::run_controller(plant, model, cfg.gains(), *trajectory, field,
                                           cfg.scenario(kind).duration, cfg.dt, seed, opts),
                     {}};
  out.metrics = compute_metrics(out.log);
  out.metrics.scenario = to_string(kind);
  out.metrics.kernel = kernels::to_string(model.formulation());
  return out;
}

const ComparisonRow& ComparisonTable::row(const std::string& scenario, const std::string& kernel) const {
  for (const auto& r : rows)
    if (r.scenario == scenario && r.kernel == kernel) return r;
  fail(ErrorKind::OutOfRange, "no comparison row for " + scenario + "/" + kernel);
}

namespace {

void mean_std(const std::vector<double>& v, double& mean, double& sd) {
  mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  sd = 0.0;
  if (v.size() > 1) {
    for (double x : v) sd += (x - mean) * (x - mean);
    sd = std::sqrt(sd / static_cast<double>(v.size() - 1));
  }
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

ComparisonTable compare_kernels(const std::vector<TrajectoryKind>& scenarios,
                                const std::vector<std::pair<std::string, kernels::KernelModel>>& kernels,
                                const std::vector<std::uint64_t>& seeds, const RunConfig& cfg) {
  require(!scenarios.empty() && !kernels.empty() && !seeds.empty(), ErrorKind::BadParams,
          "compare_kernels needs scenarios, kernels and seeds");
  ComparisonTable table;
  for (auto kind : scenarios)
    for (const auto& [name, model] : kernels) {
      std::vector<double> pred, s, q;
      for (auto seed : seeds) {
        MetricsReport m = run_scenario(kind, model, cfg, seed).metrics;
        m.kernel = name;
        pred.push_back(m.mean_prediction_error);
        s.push_back(m.rms_s);
        q.push_back(m.rms_q_err);
        table.runs.push_back(std::move(m));
      }
      ComparisonRow row{to_string(kind), name, seeds.size()};
      mean_std(pred, row.pred_mean, row.pred_std);
      mean_std(s, row.s_mean, row.s_std);
      mean_std(q, row.q_mean, row.q_std);
      table.rows.push_back(row);
    }
  return table;
}

void write_comparison_csv(const ComparisonTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out << "scenario,kernel,seeds,pred_err_mean,pred_err_std,rms_s_mean,rms_s_std,rms_q_mean,rms_q_std\n";
  for (const auto& r : table.rows)
    out << r.scenario << ',' << r.kernel << ',' << r.seeds << ',' << num(r.pred_mean) << ',' << num(r.pred_std)
        << ',' << num(r.s_mean) << ',' << num(r.s_std) << ',' << num(r.q_mean) << ',' << num(r.q_std) << '\n';
}

void write_runs_csv(const ComparisonTable& table, const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out << "scenario,kernel,seed,pred_err_mean,pred_err_max,rms_s,rms_q\n";
  for (const auto& m : table.runs)
    out << m.scenario << ',' << m.kernel << ',' << m.seed << ',' << num(m.mean_prediction_error) << ','
        << num(m.max_prediction_error) << ',' << num(m.rms_s) << ',' << num(m.rms_q_err) << '\n';
}

std::string format_comparison(const ComparisonTable& table) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-11s %-9s %22s %22s %22s\n", "scenario", "kernel", "pred err [N]",
                "rms |s| [m/s]", "rms |q~| [m]");
  out += buf;
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof buf, "%-11s %-9s %10.4f +- %-8.4f %10.4f +- %-8.4f %10.4f +- %-8.4f\n",
                  r.scenario.c_str(), r.kernel.c_str(), r.pred_mean, r.pred_std, r.s_mean, r.s_std, r.q_mean,
                  r.q_std);
    out += buf;
  }
  return out;
}

void write_prediction_histogram(const adapt::EpisodeLog& log, std::size_t bins, const std::filesystem::path& path) {
  require(bins >= 1 && !log.steps.empty(), ErrorKind::BadParams, "histogram needs bins and samples");
  std::vector<double> e;
  e.reserve(log.steps.size());
  for (const auto& r : log.steps) e.push_back(r.pred_error.norm());
  const double top = *std::max_element(e.begin(), e.end());
  const double width = top > 0.0 ? top / static_cast<double>(bins) : 1.0;
  std::vector<std::size_t> count(bins, 0);
  for (double v : e) ++count[std::min(bins - 1, static_cast<std::size_t>(v / width))];
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < bins; ++i)
    out << num(width * static_cast<double>(i)) << ',' << num(width * static_cast<double>(i + 1)) << ',' << count[i]
        << '\n';
}

}  // namespace metaadapt::harness
