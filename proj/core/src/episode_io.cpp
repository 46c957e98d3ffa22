#include "metaadapt/episode_io.hpp"

#include <charconv>
#include <fstream>

#include <nlohmann/json.hpp>

#include "metaadapt/errors.hpp"

namespace metaadapt::harness {

namespace {

void put(std::ostream& out, double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, r.ptr - buf);
}

void put(std::ostream& out, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out << ',';
    put(out, v(i));
  }
}

void names(std::vector<std::string>& cols, const std::string& base, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) cols.push_back(base + "_" + std::to_string(i));
}

std::ofstream open(const std::filesystem::path& path) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  return out;
}

nlohmann::json vec(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

void write_episode_csv(const adapt::EpisodeLog& log, const std::filesystem::path& path) {
  require(!log.steps.empty(), ErrorKind::BadParams, "write_episode_csv: empty log");
  const Eigen::Index n = log.steps.front().q.size();
  const Eigen::Index p = log.steps.front().a_hat.size();
  std::vector<std::string> cols{"t", "segment"};
  for (const char* base : {"q", "qdot", "q_d", "qdot_d", "qddot_d", "s", "tau", "f", "y", "qddot", "pred_err"})
    names(cols, base, n);
  names(cols, "a_hat", p);
  names(cols, "a_tilde", p);
  for (const char* c : {"d", "pbar_min", "pbar_max"}) cols.emplace_back(c);

  std::ofstream out = open(path);
  std::string header;
  for (std::size_t i = 0; i < cols.size(); ++i) header += (i ? "," : "") + cols[i];
  out << "# metaadapt episode log: one row per control step, dt = ";
  put(out, log.dt);
  out << " s, seed = " << log.seed << "\n# columns: " << header << "\n" << header << "\n";
  for (const auto& r : log.steps) {
    put(out, r.t);
    out << ',' << r.segment;
    for (const Vector* v : {&r.q, &r.qdot, &r.q_d, &r.qdot_d, &r.qddot_d, &r.s, &r.tau, &r.f, &r.y, &r.qddot,
                            &r.pred_error, &r.a_hat, &r.a_tilde})
      put(out, *v);
    for (double v : {r.d, r.pbar_min, r.pbar_max}) {
      out << ',';
      put(out, v);
    }
    out << '\n';
  }
}

void write_episode_summary(const EpisodeSummary& summary, const std::filesystem::path& path) {
  const auto& m = summary.metrics;
  const auto& g = summary.gains;
  nlohmann::json j;
  j["scenario"] = m.scenario;
  j["kernel"] = m.kernel;
  j["seed"] = m.seed;
  j["metrics"] = {{"mean_prediction_error", m.mean_prediction_error},
                  {"max_prediction_error", m.max_prediction_error},
                  {"rms_s", m.rms_s},
                  {"rms_q_err", m.rms_q_err}};
  j["gains"] = {{"Lambda_diag", vec(g.Lambda.diagonal())},
                {"K_diag", vec(g.K.diagonal())},
                {"lambda", g.lambda},
                {"gamma", g.gamma},
                {"filter_tc", g.filter_tc},
                {"pbar_cap", g.pbar_cap},
                {"eig_floor", g.eig_floor}};
  j["config"] = summary.config;
  if (summary.bound) {
    const auto& c = summary.bound->constants;
    j["bound"] = {{"lambda_con", c.lambda_con},   {"d_bar", c.d_bar},
                  {"kappa", c.kappa},             {"m_min", c.m_min},
                  {"m_max", c.m_max},             {"ball_radius", c.ball_radius},
                  {"theorem_radius", c.theorem_radius},
                  {"violations", summary.bound->violations},
                  {"violation_fraction", summary.bound->violation_fraction}};
  }
  std::ofstream out = open(path);
  out << j.dump(2) << '\n';
}

void write_bound_csv(const adapt::BoundReport& report, const std::filesystem::path& path) {
  std::ofstream out = open(path);
  out << "t,measured,envelope\n";
  for (std::size_t i = 0; i < report.t.size(); ++i) {
    put(out, report.t[i]);
    out << ',';
    put(out, report.measured[i]);
    out << ',';
    put(out, report.envelope[i]);
    out << '\n';
  }
}

}  // namespace metaadapt::harness
