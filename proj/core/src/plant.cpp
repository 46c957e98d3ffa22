#include "metaadapt/plant.hpp"

#include <cmath>

#include "metaadapt/errors.hpp"
#include "metaadapt/ode.hpp"
#include "metaadapt/wind.hpp"

namespace metaadapt::dynamics {

Vector State::stacked() const {
  Vector x(q.size() + qdot.size());
  x << q, qdot;
  return x;
}

State State::from_stacked(const Vector& x) {
  require(x.size() % 2 == 0, ErrorKind::ShapeMismatch, "stacked state must have even length");
  const Eigen::Index n = x.size() / 2;
  return State{x.head(n), x.tail(n)};
}

Vector PlantModel::acceleration(const State& x, const Vector& tau, const Vector& f) const {
  const Eigen::Index n = dof();
  require_shape(x.q, n, 1, "plant q");
  require_shape(x.qdot, n, 1, "plant qdot");
  require_shape(tau, n, 1, "plant tau");
  require_shape(f, n, 1, "plant disturbance");
  const Matrix H = inertia(x.q);
  const Vector rhs = tau - coriolis(x.q, x.qdot) * x.qdot - gravity(x.q) - f;
  return H.llt().solve(rhs);
}

Vector PlantModel::force_residual(const State& x, const Vector& qddot, const Vector& tau) const {
  return tau - inertia(x.q) * qddot - coriolis(x.q, x.qdot) * x.qdot - gravity(x.q);
}

QuadrotorPointMass::QuadrotorPointMass(double mass, double gravity) : mass_(mass), gravity_(gravity) {
  require(mass > 0.0, ErrorKind::BadParams, "quadrotor mass must be positive");
  require(gravity >= 0.0, ErrorKind::BadParams, "gravity must be nonnegative");
}

Matrix QuadrotorPointMass::inertia(const Vector&) const { return mass_ * Matrix::Identity(3, 3); }

Matrix QuadrotorPointMass::coriolis(const Vector&, const Vector&) const { return Matrix::Zero(3, 3); }

Vector QuadrotorPointMass::gravity(const Vector&) const {
  return (Vector(3) << 0.0, 0.0, mass_ * gravity_).finished();
}

std::unique_ptr<PlantModel> QuadrotorPointMass::clone() const {
  return std::make_unique<QuadrotorPointMass>(*this);
}

PlanarTwoLinkArm::PlanarTwoLinkArm(const Params& p) : p_(p) {
  require(p.m1 > 0 && p.m2 > 0 && p.l1 > 0 && p.i1 >= 0 && p.i2 >= 0, ErrorKind::BadParams,
          "two-link arm parameters must be positive");
}

Matrix PlanarTwoLinkArm::inertia(const Vector& q) const {
  const double c2 = std::cos(q(1));
  const double m11 = p_.m1 * p_.lc1 * p_.lc1 +
                     p_.m2 * (p_.l1 * p_.l1 + p_.lc2 * p_.lc2 + 2.0 * p_.l1 * p_.lc2 * c2) + p_.i1 + p_.i2;
  const double m12 = p_.m2 * (p_.lc2 * p_.lc2 + p_.l1 * p_.lc2 * c2) + p_.i2;
  const double m22 = p_.m2 * p_.lc2 * p_.lc2 + p_.i2;
  return (Matrix(2, 2) << m11, m12, m12, m22).finished();
}

Matrix PlanarTwoLinkArm::coriolis(const Vector& q, const Vector& qdot) const {
  const double h = p_.m2 * p_.l1 * p_.lc2 * std::sin(q(1));
  return (Matrix(2, 2) << -h * qdot(1), -h * (qdot(0) + qdot(1)), h * qdot(0), 0.0).finished();
}

Vector PlanarTwoLinkArm::gravity(const Vector& q) const {
  const double c1 = std::cos(q(0));
  const double c12 = std::cos(q(0) + q(1));
  const double g2 = p_.m2 * p_.lc2 * p_.gravity * c12;
  return (Vector(2) << (p_.m1 * p_.lc1 + p_.m2 * p_.l1) * p_.gravity * c1 + g2, g2).finished();
}

std::unique_ptr<PlantModel> PlanarTwoLinkArm::clone() const { return std::make_unique<PlanarTwoLinkArm>(*this); }

State step_plant(const PlantModel& plant, const State& x, const Vector& tau, const DisturbanceField& disturbance,
                 double t, double dt) {
  // The disturbance parameters are held at their step-start value; the
  // state dependence is re-evaluated at each stage.
  auto field = [&](const Vector& s, const Vector& u) {
    const State st = State::from_stacked(s);
    Vector ds(s.size());
    ds << st.qdot, plant.acceleration(st, u, disturbance.force(st, t));
    return ds;
  };
  return State::from_stacked(integrate_step(field, x.stacked(), tau, dt));
}

}  // namespace metaadapt::dynamics
