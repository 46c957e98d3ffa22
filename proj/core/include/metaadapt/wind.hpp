#pragma once

#include <string>
#include <vector>

#include "metaadapt/linalg.hpp"
#include "metaadapt/plant.hpp"

namespace metaadapt::dynamics {

inline constexpr double kMaxWindSpeed = 10.0;

/// Coefficients mapping a wind speed to a full WindCondition. Linear drag and
/// the altitude term grow with wind speed, so conditions differ by more than
/// the free-stream vector alone.
struct WindFamily {
  Vector direction = Vector::Unit(3, 0);
  Vector drag_quadratic = (Vector(3) << 0.05, 0.05, 0.08).finished();        // kg/m
  Vector drag_linear = (Vector(3) << 0.10, 0.10, 0.12).finished();           // kg/s
  Vector drag_linear_per_speed = (Vector(3) << 0.02, 0.02, 0.01).finished();  // kg/m
  double ground_effect = 0.6;            // N
  double ground_effect_per_speed = 0.08;  // N·s/m
  double ground_height = 1.0;             // m
};

/// Hidden environment parameter c: free-stream velocity plus the drag and
/// coupling coefficients of the synthetic aerodynamic model.
struct WindCondition {
  Vector wind_velocity = Vector::Zero(3);
  Vector drag_quadratic = Vector::Zero(3);
  Vector drag_linear = Vector::Zero(3);
  double ground_effect = 0.0;
  double ground_height = 1.0;
  std::string label;

  /// Throws OutOfRange outside the [0, 10] m/s envelope.
  static WindCondition from_speed(double speed, const WindFamily& family = {});
  [[nodiscard]] double speed() const { return wind_velocity.norm(); }
  void validate() const;
};

/// Physical aerodynamic force on the vehicle:
///   f_a = −D·v_r‖v_r‖ − B·v_r + h·exp(−q_z/z₀)·ê_z,  v_r = q̇ − v_w.
[[nodiscard]] Vector aerodynamic_force(const State& x, const WindCondition& c);

/// The generalized disturbance term f of H q̈ + C q̇ + g + f = τ, i.e. −f_a.
[[nodiscard]] Vector disturbance(const State& x, const WindCondition& c);

/// Piecewise-constant, right-continuous map t → WindCondition on [0, t_f].
class WindSchedule {
 public:
  WindSchedule(std::vector<double> starts, std::vector<WindCondition> conditions, double t_final);

  static WindSchedule constant(const WindCondition& c, double t_final);
  /// Builds from (start time, wind speed) pairs.
  static WindSchedule from_speeds(const std::vector<std::pair<double, double>>& steps, double t_final,
                                  const WindFamily& family = {});

  [[nodiscard]] const WindCondition& at(double t) const;
  [[nodiscard]] std::size_t segment_at(double t) const;
  [[nodiscard]] const std::vector<double>& starts() const noexcept { return starts_; }
  [[nodiscard]] const std::vector<WindCondition>& conditions() const noexcept { return conditions_; }
  [[nodiscard]] double t_final() const noexcept { return t_final_; }

 private:
  std::vector<double> starts_;
  std::vector<WindCondition> conditions_;
  double t_final_;
};

/// Ground-truth disturbance source for a closed-loop run. Implementations
/// report constant-parameter segments so the log can fit one comparison
/// parameter per segment.
class DisturbanceField {
 public:
  virtual ~DisturbanceField() = default;
  [[nodiscard]] virtual Vector force(const State& x, double t) const = 0;
  [[nodiscard]] virtual std::vector<double> segment_starts() const { return {0.0}; }
};

class ZeroDisturbance final : public DisturbanceField {
 public:
  explicit ZeroDisturbance(Eigen::Index n) : n_(n) {}
  [[nodiscard]] Vector force(const State&, double) const override { return Vector::Zero(n_); }

 private:
  Eigen::Index n_;
};

class WindField final : public DisturbanceField {
 public:
  explicit WindField(WindSchedule schedule) : schedule_(std::move(schedule)) {}
  [[nodiscard]] Vector force(const State& x, double t) const override;
  [[nodiscard]] std::vector<double> segment_starts() const override { return schedule_.starts(); }
  [[nodiscard]] const WindSchedule& schedule() const noexcept { return schedule_; }

 private:
  WindSchedule schedule_;
};

}  // namespace metaadapt::dynamics
