#include "metaadapt/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "metaadapt/errors.hpp"

namespace metaadapt::harness {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  return out;
}

double to_double(const std::string& s, const std::string& key) {
  double v = 0.0;
  const auto t = trim(s);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  require(ec == std::errc{} && ptr == t.data() + t.size(), ErrorKind::BadParams,
          "config key '" + key + "': '" + s + "' is not a number");
  return v;
}

std::uint64_t to_uint(const std::string& s, const std::string& key) {
  std::uint64_t v = 0;
  const auto t = trim(s);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  require(ec == std::errc{} && ptr == t.data() + t.size(), ErrorKind::BadParams,
          "config key '" + key + "': '" + s + "' is not a nonnegative integer");
  return v;
}

bool to_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  fail(ErrorKind::BadParams, "config key '" + key + "': '" + s + "' is not a boolean");
}

Vector to_vector(const std::string& s, const std::string& key) {
  const auto parts = split(s, ',');
  Vector v(static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) v(static_cast<Eigen::Index>(i)) = to_double(parts[i], key);
  return v;
}

Vector to_vector3(const std::string& s, const std::string& key) {
  Vector v = to_vector(s, key);
  require(v.size() == 3, ErrorKind::BadParams, "config key '" + key + "' needs 3 components");
  return v;
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v(i));
  return out;
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

std::string fmt_schedule(const SpeedSchedule& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + fmt(s[i].first) + ":" + fmt(s[i].second);
  return out;
}

struct Entry {
  const char* key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define MA_DOUBLE(name, field)                                                                   \
  Entry {                                                                                        \
    name, [](RunConfig& c, const std::string& v, const std::string& k) { c.field = to_double(v, k); }, \
        [](const RunConfig& c) { return fmt(c.field); }                                          \
  }
#define MA_VEC3(name, field)                                                                      \
  Entry {                                                                                         \
    name, [](RunConfig& c, const std::string& v, const std::string& k) { c.field = to_vector3(v, k); }, \
        [](const RunConfig& c) { return fmt(c.field); }                                           \
  }
#define MA_SIZE(name, field)                                                                       \
  Entry {                                                                                          \
    name,                                                                                          \
        [](RunConfig& c, const std::string& v, const std::string& k) {                            \
          c.field = static_cast<decltype(c.field)>(to_uint(v, k));                                 \
        },                                                                                         \
        [](const RunConfig& c) { return std::to_string(c.field); }                                 \
  }
#define MA_BOOL(name, field)                                                                    \
  Entry {                                                                                       \
    name, [](RunConfig& c, const std::string& v, const std::string& k) { c.field = to_bool(v, k); }, \
        [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }              \
  }
#define MA_SCENARIO(prefix, member)                                                                      \
  Entry{prefix ".schedule",                                                                              \
        [](RunConfig& c, const std::string& v, const std::string&) { c.member.schedule = parse_schedule(v); }, \
        [](const RunConfig& c) { return fmt_schedule(c.member.schedule); }},                             \
      MA_DOUBLE(prefix ".duration", member.duration)

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table{
      MA_DOUBLE("plant.mass", mass),
      MA_DOUBLE("plant.gravity", gravity),
      MA_VEC3("gains.Lambda", lambda_diag),
      MA_VEC3("gains.K", k_diag),
      MA_DOUBLE("gains.lambda", forgetting),
      MA_DOUBLE("gains.gamma", regularization),
      MA_DOUBLE("gains.filter_tc", filter_tc),
      MA_DOUBLE("gains.pbar_cap", pbar_cap),
      MA_DOUBLE("gains.eig_floor", eig_floor),
      MA_DOUBLE("sim.dt", dt),
      MA_DOUBLE("sim.noise_sigma", noise_sigma),
      MA_VEC3("traj.center", trajectory.center),
      MA_DOUBLE("traj.half_width", trajectory.half_width),
      MA_DOUBLE("traj.hold", trajectory.hold),
      MA_DOUBLE("traj.period", trajectory.period),
      MA_DOUBLE("traj.amplitude_x", trajectory.amplitude_x),
      MA_DOUBLE("traj.amplitude_z", trajectory.amplitude_z),
      MA_VEC3("wind.direction", wind.direction),
      MA_VEC3("wind.drag_quadratic", wind.drag_quadratic),
      MA_VEC3("wind.drag_linear", wind.drag_linear),
      MA_VEC3("wind.drag_linear_per_speed", wind.drag_linear_per_speed),
      MA_DOUBLE("wind.ground_effect", wind.ground_effect),
      MA_DOUBLE("wind.ground_effect_per_speed", wind.ground_effect_per_speed),
      MA_DOUBLE("wind.ground_height", wind.ground_height),
      MA_SCENARIO("scenario.hover", hover),
      MA_SCENARIO("scenario.randomwalk", randomwalk),
      MA_SCENARIO("scenario.fig8", fig8),
      Entry{"collect.speeds",
            [](RunConfig& c, const std::string& v, const std::string& k) {
              const Vector s = to_vector(v, k);
              c.collect_speeds.assign(s.data(), s.data() + s.size());
            },
            [](const RunConfig& c) { return fmt_list(c.collect_speeds); }},
      MA_DOUBLE("collect.duration", collect_duration),
      MA_VEC3("collect.Lambda", collect_lambda_diag),
      MA_VEC3("collect.K", collect_k_diag),
      MA_DOUBLE("collect.lambda", collect_forgetting),
      MA_DOUBLE("collect.gamma", collect_regularization),
      MA_SIZE("collect.train_stride", train_stride),
      Entry{"collect.validation_speeds",
            [](RunConfig& c, const std::string& v, const std::string& k) {
              const Vector s = to_vector(v, k);
              c.validation_speeds.assign(s.data(), s.data() + s.size());
            },
            [](const RunConfig& c) { return fmt_list(c.validation_speeds); }},
      MA_DOUBLE("collect.validation_duration", validation_duration),
      Entry{"kernel.hidden",
            [](RunConfig& c, const std::string& v, const std::string& k) {
              c.architecture.hidden.clear();
              for (const auto& part : split(v, ','))
                c.architecture.hidden.push_back(static_cast<Eigen::Index>(to_uint(part, k)));
            },
            [](const RunConfig& c) {
              std::string out;
              for (std::size_t i = 0; i < c.architecture.hidden.size(); ++i)
                out += (i ? "," : "") + std::to_string(c.architecture.hidden[i]);
              return out;
            }},
      MA_SIZE("kernel.count", architecture.kernel_count),
      MA_DOUBLE("kernel.sigma_bar", architecture.sigma_bar),
      MA_SIZE("kernel.power_iters", architecture.power_iters),
      MA_DOUBLE("meta.learning_rate", meta.learning_rate),
      MA_SIZE("meta.max_epochs", meta.max_epochs),
      MA_SIZE("meta.patience", meta.patience),
      MA_DOUBLE("meta.tolerance", meta.tolerance),
      MA_DOUBLE("meta.adapt_fraction", meta.adapt_fraction),
      MA_DOUBLE("meta.ridge", meta.ridge),
      MA_DOUBLE("meta.fallback_ridge", meta.fallback_ridge),
      Entry{"meta.gradient_policy",
            [](RunConfig& c, const std::string& v, const std::string&) {
              c.meta.gradient_policy = meta::parse_gradient_policy(v);
            },
            [](const RunConfig& c) {
              return std::string(c.meta.gradient_policy == meta::GradientPolicy::Full ? "full" : "stop");
            }},
      MA_BOOL("meta.full_batch", meta.full_batch),
      Entry{"meta.optimizer",
            [](RunConfig& c, const std::string& v, const std::string&) { c.meta.optimizer = meta::parse_optimizer(v); },
            [](const RunConfig& c) {
              switch (c.meta.optimizer) {
                case meta::OptimizerKind::Momentum: return std::string("momentum");
                case meta::OptimizerKind::Adam: return std::string("adam");
                default: return std::string("sgd");
              }
            }},
      MA_DOUBLE("meta.momentum", meta.momentum),
      MA_DOUBLE("meta.adam_beta1", meta.adam_beta1),
      MA_DOUBLE("meta.adam_beta2", meta.adam_beta2),
      MA_DOUBLE("meta.adam_epsilon", meta.adam_epsilon),
      MA_BOOL("meta.line_search", meta.line_search),
      MA_SIZE("meta.line_search_halvings", meta.line_search_halvings),
      MA_DOUBLE("meta.line_search_growth", meta.line_search_growth),
      MA_DOUBLE("meta.validation_fraction", meta.validation_fraction),
      MA_SIZE("meta.seed", meta.seed),
      MA_SIZE("eval.seeds", eval_seeds),
      MA_SIZE("seed", seed),
  };
  return table;
}

#undef MA_DOUBLE
#undef MA_VEC3
#undef MA_SIZE
#undef MA_BOOL
#undef MA_SCENARIO

}  // namespace

adapt::Gains RunConfig::gains() const {
  adapt::Gains g;
  g.Lambda = lambda_diag.asDiagonal();
  g.K = k_diag.asDiagonal();
  g.lambda = forgetting;
  g.gamma = regularization;
  g.filter_tc = filter_tc;
  g.pbar_cap = pbar_cap;
  g.eig_floor = eig_floor;
  return g;
}

adapt::Gains RunConfig::collect_gains() const {
  adapt::Gains g = gains();
  g.Lambda = collect_lambda_diag.asDiagonal();
  g.K = collect_k_diag.asDiagonal();
  g.lambda = collect_forgetting;
  g.gamma = collect_regularization;
  return g;
}

const ScenarioSettings& RunConfig::scenario(TrajectoryKind kind) const {
  switch (kind) {
    case TrajectoryKind::Hover: return hover;
    case TrajectoryKind::RandomWalk: return randomwalk;
    case TrajectoryKind::Figure8: return fig8;
  }
  return hover;
}

void RunConfig::validate() const {
  require(mass > 0.0 && gravity >= 0.0, ErrorKind::BadParams, "plant mass must be positive, gravity nonnegative");
  gains().validate();
  collect_gains().validate();
  require(dt > 0.0, ErrorKind::BadParams, "sim.dt must be positive");
  require(noise_sigma >= 0.0, ErrorKind::BadParams, "sim.noise_sigma must be nonnegative");
  for (auto kind : {TrajectoryKind::Hover, TrajectoryKind::RandomWalk, TrajectoryKind::Figure8}) {
    trajectory.validate(kind);
    const auto& s = scenario(kind);
    require(s.duration > 0.0 && !s.schedule.empty(), ErrorKind::BadParams, "scenario " + to_string(kind) + " settings");
  }
  require(!collect_speeds.empty() && collect_duration > 0.0 && train_stride >= 1, ErrorKind::BadParams,
          "collection settings");
  require(architecture.kernel_count >= 1 && architecture.sigma_bar > 0.0, ErrorKind::BadParams, "kernel settings");
  require(eval_seeds >= 1, ErrorKind::BadParams, "eval.seeds must be >= 1");
  meta.validate();
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& e : entries())
    if (key == e.key) {
      e.set(cfg, value, key);
      return;
    }
  fail(ErrorKind::BadParams, "unknown config key '" + key + "'");
}

RunConfig parse_config(const std::string& text, RunConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    require(eq != std::string::npos, ErrorKind::BadParams,
            "config line " + std::to_string(lineno) + ": expected key = value");
    apply_setting(base, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  base.validate();
  return base;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& e : entries()) out += std::string(e.key) + " = " + e.get(cfg) + "\n";
  return out;
}

SpeedSchedule parse_schedule(const std::string& s) {
  SpeedSchedule out;
  for (const auto& part : split(s, ',')) {
    const auto colon = part.find(':');
    require(colon != std::string::npos, ErrorKind::BadParams, "schedule entry '" + part + "' must be t:speed");
    out.emplace_back(to_double(part.substr(0, colon), "schedule"), to_double(part.substr(colon + 1), "schedule"));
  }
  require(!out.empty(), ErrorKind::BadParams, "empty wind schedule");
  return out;
}

}  // namespace metaadapt::harness
