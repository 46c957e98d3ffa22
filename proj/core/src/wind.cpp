#include "metaadapt/wind.hpp"

#include <cmath>

#include "metaadapt/errors.hpp"

namespace metaadapt::dynamics {

WindCondition WindCondition::from_speed(double speed, const WindFamily& family) {
  if (!(speed >= 0.0 && speed <= kMaxWindSpeed)) {
    fail(ErrorKind::OutOfRange, "wind speed " + std::to_string(speed) + " outside [0, 10] m/s");
  }
  require_shape(family.direction, 3, 1, "wind direction");
  const double dn = family.direction.norm();
  require(dn > 0.0, ErrorKind::BadParams, "wind direction must be nonzero");
  WindCondition c;
  c.wind_velocity = speed * family.direction / dn;
  c.drag_quadratic = family.drag_quadratic;
  c.drag_linear = family.drag_linear + speed * family.drag_linear_per_speed;
  c.ground_effect = family.ground_effect + speed * family.ground_effect_per_speed;
  c.ground_height = family.ground_height;
  char buf[32];
  std::snprintf(buf, sizeof buf, "wind_%.2f", speed);
  c.label = buf;
  c.validate();
  return c;
}

void WindCondition::validate() const {
  require_shape(wind_velocity, 3, 1, "wind velocity");
  require_shape(drag_quadratic, 3, 1, "quadratic drag");
  require_shape(drag_linear, 3, 1, "linear drag");
  require(wind_velocity.allFinite() && drag_quadratic.allFinite() && drag_linear.allFinite() &&
              std::isfinite(ground_effect),
          ErrorKind::NonFinite, "wind condition has non-finite entries");
  require(ground_height > 0.0, ErrorKind::BadParams, "ground-effect height scale must be positive");
  if (wind_velocity.norm() > kMaxWindSpeed) fail(ErrorKind::OutOfRange, "wind speed outside envelope");
}

Vector aerodynamic_force(const State& x, const WindCondition& c) {
  require_shape(x.qdot, 3, 1, "aerodynamic force velocity");
  const Vector vr = x.qdot - c.wind_velocity;
  const double speed = vr.norm();
  Vector f = -(c.drag_quadratic.array() * vr.array() * speed).matrix() - (c.drag_linear.array() * vr.array()).matrix();
  f(2) += c.ground_effect * std::exp(-x.q(2) / c.ground_height);
  return f;
}

Vector disturbance(const State& x, const WindCondition& c) { return -aerodynamic_force(x, c); }

WindSchedule::WindSchedule(std::vector<double> starts, std::vector<WindCondition> conditions, double t_final)
    : starts_(std::move(starts)), conditions_(std::move(conditions)), t_final_(t_final) {
  require(!starts_.empty() && starts_.size() == conditions_.size(), ErrorKind::BadParams,
          "wind schedule needs one condition per breakpoint");
  require(starts_.front() == 0.0, ErrorKind::BadParams, "wind schedule must start at t = 0");
  for (std::size_t i = 1; i < starts_.size(); ++i) {
    require(starts_[i] > starts_[i - 1], ErrorKind::BadParams, "wind breakpoints must be strictly increasing");
  }
  require(t_final_ > starts_.back(), ErrorKind::BadParams, "wind schedule t_final must follow the last breakpoint");
  for (const auto& c : conditions_) c.validate();
}

WindSchedule WindSchedule::constant(const WindCondition& c, double t_final) { return WindSchedule({0.0}, {c}, t_final); }

WindSchedule WindSchedule::from_speeds(const std::vector<std::pair<double, double>>& steps, double t_final,
                                       const WindFamily& family) {
  std::vector<double> starts;
  std::vector<WindCondition> conditions;
  for (const auto& [t0, v] : steps) {
    starts.push_back(t0);
    conditions.push_back(WindCondition::from_speed(v, family));
  }
  return WindSchedule(std::move(starts), std::move(conditions), t_final);
}

std::size_t WindSchedule::segment_at(double t) const {
  if (!(t >= 0.0 && t <= t_final_)) {
    fail(ErrorKind::OutOfRange, "wind schedule queried at t = " + std::to_string(t) + " outside [0, t_f]");
  }
  std::size_t i = 0;
  while (i + 1 < starts_.size() && t >= starts_[i + 1]) ++i;
  return i;
}

const WindCondition& WindSchedule::at(double t) const { return conditions_[segment_at(t)]; }

Vector WindField::force(const State& x, double t) const { return disturbance(x, schedule_.at(t)); }

}  // namespace metaadapt::dynamics
