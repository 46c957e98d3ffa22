#pragma once

// Mechanical plants of the form H(q)q̈ + C(q,q̇)q̇ + g(q) + f(q,q̇;c) = τ.

#include <memory>

#include "metaadapt/linalg.hpp"

namespace metaadapt::dynamics {

/// Generalized position and velocity, both of dimension n.
struct State {
  Vector q;
  Vector qdot;

  [[nodiscard]] Eigen::Index dim() const noexcept { return q.size(); }
  /// Stacked (q, q̇), the network input before standardization.
  [[nodiscard]] Vector stacked() const;
  static State from_stacked(const Vector& x);
};

class DisturbanceField;

class PlantModel {
 public:
  virtual ~PlantModel() = default;

  [[nodiscard]] virtual Eigen::Index dof() const = 0;
  [[nodiscard]] virtual Matrix inertia(const Vector& q) const = 0;
  [[nodiscard]] virtual Matrix coriolis(const Vector& q, const Vector& qdot) const = 0;
  [[nodiscard]] virtual Vector gravity(const Vector& q) const = 0;
  [[nodiscard]] virtual std::unique_ptr<PlantModel> clone() const = 0;

  /// q̈ = H⁻¹(τ − Cq̇ − g − f).
  [[nodiscard]] Vector acceleration(const State& x, const Vector& tau, const Vector& f) const;

  /// Generalized force implied by a measured acceleration: τ − Hq̈ − Cq̇ − g.
  /// This equals f when q̈ is the true acceleration.
  [[nodiscard]] Vector force_residual(const State& x, const Vector& qddot, const Vector& tau) const;
};

/// Position dynamics of a quadrotor with perfect attitude tracking:
/// H = m·I, C ≡ 0, g(q) = (0, 0, m·g₀), τ = R f_u commanded directly.
class QuadrotorPointMass final : public PlantModel {
 public:
  QuadrotorPointMass(double mass, double gravity);

  [[nodiscard]] Eigen::Index dof() const override { return 3; }
  [[nodiscard]] Matrix inertia(const Vector& q) const override;
  [[nodiscard]] Matrix coriolis(const Vector& q, const Vector& qdot) const override;
  [[nodiscard]] Vector gravity(const Vector& q) const override;
  [[nodiscard]] std::unique_ptr<PlantModel> clone() const override;

  [[nodiscard]] double mass() const noexcept { return mass_; }
  [[nodiscard]] double gravity_magnitude() const noexcept { return gravity_; }

 private:
  double mass_;
  double gravity_;
};

/// Vertical-plane two-link arm with point-mass-plus-inertia links. Used to
/// exercise the general interface where C ≢ 0 and H depends on q.
class PlanarTwoLinkArm final : public PlantModel {
 public:
  struct Params {
    double m1 = 1.0, m2 = 0.8;
    double l1 = 0.5;
    double lc1 = 0.25, lc2 = 0.2;
    double i1 = 0.02, i2 = 0.015;
    double gravity = 9.81;
  };

  PlanarTwoLinkArm() : PlanarTwoLinkArm(Params{}) {}
  explicit PlanarTwoLinkArm(const Params& p);

  [[nodiscard]] Eigen::Index dof() const override { return 2; }
  [[nodiscard]] Matrix inertia(const Vector& q) const override;
  [[nodiscard]] Matrix coriolis(const Vector& q, const Vector& qdot) const override;
  [[nodiscard]] Vector gravity(const Vector& q) const override;
  [[nodiscard]] std::unique_ptr<PlantModel> clone() const override;

 private:
  Params p_;
};

/// RK4 step of the plant with τ held and f re-evaluated at every stage.
[[nodiscard]] State step_plant(const PlantModel& plant, const State& x, const Vector& tau,
                               const DisturbanceField& disturbance, double t, double dt);

}  // namespace metaadapt::dynamics
