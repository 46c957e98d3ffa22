#include <cmath>

#include <gtest/gtest.h>

#include "metaadapt/errors.hpp"
#include "metaadapt/plant.hpp"
#include "metaadapt/rng.hpp"
#include "metaadapt/wind.hpp"
#include "oracles.hpp"

using namespace metaadapt;
using namespace metaadapt::dynamics;

namespace {

State make_state(Vector q, Vector qdot) { return State{std::move(q), std::move(qdot)}; }

Vector vec3(double x, double y, double z) { return (Vector(3) << x, y, z).finished(); }

class ConstantForce final : public DisturbanceField {
 public:
  explicit ConstantForce(Vector f) : f_(std::move(f)) {}
  Vector force(const State&, double) const override { return f_; }

 private:
  Vector f_;
};

WindSchedule hover_schedule() { return WindSchedule::from_speeds({{0.0, 2.5}, {15.0, 4.3}, {25.0, 6.2}}, 35.0); }

}  // namespace

TEST(Disturbance, ZeroWithoutAirflowOrCoupling) {
  WindFamily fam;
  fam.ground_effect = 0.0;
  fam.ground_effect_per_speed = 0.0;
  const WindCondition c = WindCondition::from_speed(0.0, fam);
  const Vector f = disturbance(make_state(vec3(0, 0, 1), Vector::Zero(3)), c);
  EXPECT_EQ(f.norm(), 0.0);
}

TEST(Disturbance, GoldenValueDefaultFamily) {
  const WindCondition c = WindCondition::from_speed(4.3);
  const Vector f = disturbance(make_state(vec3(0, 0, 1), Vector::Zero(3)), c);
  EXPECT_NEAR(f(0), -1.7243, 1e-12);
  EXPECT_NEAR(f(1), 0.0, 1e-15);
  EXPECT_NEAR(f(2), -0.3472781924658415, 1e-12);
  EXPECT_NEAR((aerodynamic_force(make_state(vec3(0, 0, 1), Vector::Zero(3)), c) + f).norm(), 0.0, 1e-15);
}

TEST(Disturbance, OddInRelativeVelocityForPureDrag) {
  WindFamily fam;
  fam.ground_effect = 0.0;
  fam.ground_effect_per_speed = 0.0;
  Rng rng(21);
  for (int i = 0; i < 50; ++i) {
    const WindCondition c = WindCondition::from_speed(rng.uniform(0.0, 10.0), fam);
    const Vector r = oracle::random_matrix(rng, 3, 1, -5.0, 5.0);
    const Vector q = oracle::random_matrix(rng, 3, 1, 0.0, 2.0);
    const Vector plus = disturbance(make_state(q, c.wind_velocity + r), c);
    const Vector minus = disturbance(make_state(q, c.wind_velocity - r), c);
    EXPECT_LE((plus + minus).norm(), 1e-12);
  }
}

TEST(Disturbance, BoundedAndLipschitzOnEnvelope) {
  // Dense grid over wind speed, velocity and altitude.
  double f_max = 0.0, lip = 0.0;
  const double h = 1e-4;
  for (double v = 0.0; v <= 10.0; v += 1.0) {
    const WindCondition c = WindCondition::from_speed(v);
    for (double vx = -3.0; vx <= 3.0; vx += 1.0)
      for (double vz = -2.0; vz <= 2.0; vz += 1.0)
        for (double z = 0.0; z <= 3.0; z += 0.5) {
          const State x = make_state(vec3(0, 0, z), vec3(vx, 0.5, vz));
          const Vector f = disturbance(x, c);
          ASSERT_TRUE(f.allFinite());
          f_max = std::max(f_max, f.norm());
          for (int k = 0; k < 6; ++k) {
            State y = x;
            if (k < 3) y.q(k) += h; else y.qdot(k - 3) += h;
            lip = std::max(lip, (disturbance(y, c) - f).norm() / h);
          }
        }
  }
  // Worst case is |v_r| ≈ 13 m/s along x.
  EXPECT_LT(f_max, 20.0);
  EXPECT_TRUE(std::isfinite(lip));
  EXPECT_LT(lip, 5.0);
}

TEST(Disturbance, RejectsSpeedOutsideEnvelope) {
  EXPECT_THROW((void)WindCondition::from_speed(10.5), Error);
  EXPECT_THROW((void)WindCondition::from_speed(-0.1), Error);
  EXPECT_NO_THROW((void)WindCondition::from_speed(10.0));
}

TEST(Plant, QuadrotorHoverIsStationary) {
  const QuadrotorPointMass plant(1.47, 9.81);
  const WindField field(WindSchedule::constant(WindCondition::from_speed(4.3), 10.0));
  State x = make_state(vec3(0.2, -0.1, 1.0), Vector::Zero(3));
  const Vector tau = plant.gravity(x.q) + field.force(x, 0.0);
  EXPECT_LE(plant.acceleration(x, tau, field.force(x, 0.0)).norm(), 1e-14);
  const State start = x;
  for (int i = 0; i < 100; ++i) x = step_plant(plant, x, tau, field, 0.01 * i, 0.01);
  EXPECT_LE((x.q - start.q).norm(), 1e-12);
  EXPECT_LE(x.qdot.norm(), 1e-12);
}

TEST(Plant, QuadrotorFreeFall) {
  const QuadrotorPointMass plant(1.47, 9.81);
  const State x = make_state(vec3(0, 0, 5), vec3(1, 2, 3));
  const Vector a = plant.acceleration(x, Vector::Zero(3), Vector::Zero(3));
  EXPECT_NEAR((a - vec3(0, 0, -9.81)).norm(), 0.0, 1e-14);
}

TEST(Plant, BallisticArcMatchesKinematics) {
  const QuadrotorPointMass plant(1.47, 9.81);
  const ZeroDisturbance none(3);
  const Vector q0 = vec3(0, 0, 1), v0 = vec3(1.0, -0.5, 4.0);
  State x = make_state(q0, v0);
  const double dt = 0.01;
  for (int i = 0; i < 100; ++i) x = step_plant(plant, x, Vector::Zero(3), none, i * dt, dt);
  const Vector g = vec3(0, 0, -9.81);
  EXPECT_LE((x.q - (q0 + v0 + 0.5 * g)).norm(), 1e-8);
  EXPECT_LE((x.qdot - (v0 + g)).norm(), 1e-8);
}

TEST(Plant, ConstantDisturbanceEntersWithPositiveSign) {
  const QuadrotorPointMass plant(2.0, 0.0);
  const ConstantForce push(vec3(1.0, 0.0, 0.0));
  const State x = step_plant(plant, make_state(Vector::Zero(3), Vector::Zero(3)), Vector::Zero(3), push, 0.0, 1.0);
  EXPECT_NEAR(x.qdot(0), -0.5, 1e-14);
}

TEST(Plant, ForceResidualRecoversDisturbance) {
  const PlanarTwoLinkArm arm;
  Rng rng(31);
  const State x = make_state(oracle::random_matrix(rng, 2, 1), oracle::random_matrix(rng, 2, 1));
  const Vector tau = oracle::random_matrix(rng, 2, 1);
  const Vector f = oracle::random_matrix(rng, 2, 1);
  const Vector qddot = arm.acceleration(x, tau, f);
  EXPECT_LE((arm.force_residual(x, qddot, tau) - f).norm(), 1e-12);
}

TEST(Plant, TwoLinkInertiaIsSpd) {
  const PlanarTwoLinkArm arm;
  Rng rng(32);
  for (int i = 0; i < 200; ++i) {
    const Matrix H = arm.inertia(oracle::random_matrix(rng, 2, 1, -M_PI, M_PI));
    EXPECT_EQ((H - H.transpose()).norm(), 0.0);
    EXPECT_EQ(H.llt().info(), Eigen::Success);
  }
  const QuadrotorPointMass quad(1.47, 9.81);
  EXPECT_EQ(quad.inertia(Vector::Zero(3)).llt().info(), Eigen::Success);
}

TEST(Plant, TwoLinkHdotMinusTwoCIsSkew) {
  const PlanarTwoLinkArm arm;
  Rng rng(33);
  const double eps = 1e-6;
  for (int i = 0; i < 100; ++i) {
    const Vector q = oracle::random_matrix(rng, 2, 1, -M_PI, M_PI);
    const Vector qd = oracle::random_matrix(rng, 2, 1, -2.0, 2.0);
    const Vector v = oracle::random_matrix(rng, 2, 1);
    const Matrix Hdot = (arm.inertia(q + eps * qd) - arm.inertia(q - eps * qd)) / (2.0 * eps);
    const Matrix N = Hdot - 2.0 * arm.coriolis(q, qd);
    EXPECT_NEAR(v.dot(N * v), 0.0, 1e-8);
  }
}

TEST(Plant, KineticEnergyConservedWithoutForces) {
  const PlanarTwoLinkArm::Params p{1.0, 0.8, 0.5, 0.25, 0.2, 0.02, 0.015, 0.0};
  const PlanarTwoLinkArm arm(p);
  const ZeroDisturbance none(2);
  auto drift = [&](double dt) {
    State x = make_state((Vector(2) << 0.3, -0.7).finished(), (Vector(2) << 1.5, -2.0).finished());
    auto energy = [&](const State& s) { return 0.5 * s.qdot.dot(arm.inertia(s.q) * s.qdot); };
    const double e0 = energy(x);
    const int steps = static_cast<int>(std::lround(1.0 / dt));
    for (int i = 0; i < steps; ++i) x = step_plant(arm, x, Vector::Zero(2), none, i * dt, dt);
    return std::abs(energy(x) - e0) / e0;
  };
  const double coarse = drift(0.01), fine = drift(0.005);
  EXPECT_LT(fine, 1e-7);
  EXPECT_GT(coarse / fine, 8.0);

  const QuadrotorPointMass quad(1.47, 0.0);
  State x = make_state(Vector::Zero(3), vec3(1, 2, 3));
  for (int i = 0; i < 100; ++i) x = step_plant(quad, x, Vector::Zero(3), ZeroDisturbance(3), 0.01 * i, 0.01);
  EXPECT_NEAR(x.qdot.squaredNorm(), 14.0, 1e-12);
}

TEST(Plant, StepRejectsBadInputs) {
  const QuadrotorPointMass plant(1.47, 9.81);
  const ZeroDisturbance none(3);
  const State x = make_state(Vector::Zero(3), Vector::Zero(3));
  EXPECT_THROW((void)step_plant(plant, x, Vector::Zero(3), none, 0.0, 0.0), Error);
  const ConstantForce huge(Vector::Constant(3, 1e308));
  try {
    State y = x;
    for (int i = 0; i < 10; ++i) y = step_plant(plant, y, Vector::Constant(3, -1e308), huge, 0.0, 1e10);
    ADD_FAILURE() << "expected NonFinite";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFinite);
  }
}

TEST(WindSchedule, HoverLookups) {
  const WindSchedule s = hover_schedule();
  EXPECT_NEAR(s.at(5.0).speed(), 2.5, 1e-12);
  EXPECT_NEAR(s.at(16.0).speed(), 4.3, 1e-12);
  EXPECT_NEAR(s.at(30.0).speed(), 6.2, 1e-12);
}

TEST(WindSchedule, RightContinuousAndBounded) {
  const WindSchedule s = hover_schedule();
  EXPECT_EQ(s.segment_at(0.0), 0u);
  EXPECT_EQ(s.segment_at(std::nextafter(15.0, 0.0)), 0u);
  EXPECT_EQ(s.segment_at(15.0), 1u);
  EXPECT_EQ(s.segment_at(25.0), 2u);
  EXPECT_EQ(s.segment_at(35.0), 2u);
  for (double t : {-0.01, 35.01}) {
    try {
      (void)s.at(t);
      ADD_FAILURE() << "expected OutOfRange";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::OutOfRange);
    }
  }
}

TEST(WindSchedule, RejectsUnorderedBreakpoints) {
  EXPECT_THROW((void)WindSchedule::from_speeds({{0.0, 1.0}, {5.0, 2.0}, {5.0, 3.0}}, 10.0), Error);
  EXPECT_THROW((void)WindSchedule::from_speeds({{1.0, 1.0}}, 10.0), Error);
  EXPECT_THROW((void)WindSchedule::from_speeds({{0.0, 1.0}, {12.0, 2.0}}, 10.0), Error);
}

TEST(State, StackRoundTrip) {
  const State x = make_state(vec3(1, 2, 3), vec3(4, 5, 6));
  const Vector s = x.stacked();
  ASSERT_EQ(s.size(), 6);
  const State y = State::from_stacked(s);
  EXPECT_EQ(y.q, x.q);
  EXPECT_EQ(y.qdot, x.qdot);
}
