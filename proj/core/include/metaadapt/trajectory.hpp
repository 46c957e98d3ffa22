#pragma once

// Desired trajectories q_d(t) with analytic first and second derivatives.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "metaadapt/linalg.hpp"

namespace metaadapt::harness {

struct DesiredPoint {
  Vector q;
  Vector qdot;
  Vector qddot;
};

enum class TrajectoryKind { Hover, RandomWalk, Figure8 };

[[nodiscard]] std::string to_string(TrajectoryKind k);
[[nodiscard]] TrajectoryKind parse_trajectory(const std::string& s);

struct TrajectoryParams {
  Vector center = (Vector(3) << 0.0, 0.0, 1.0).finished();
  double half_width = 0.5;  // random-walk cube
  double hold = 1.0;        // s between random-walk setpoints
  double duration = 60.0;   // random walk draws ceil(duration / hold) setpoints
  double period = 8.0;      // figure-8 loop time
  double amplitude_x = 1.0;
  double amplitude_z = 0.5;

  void validate(TrajectoryKind kind) const;
};

class Trajectory {
 public:
  virtual ~Trajectory() = default;
  [[nodiscard]] virtual DesiredPoint at(double t) const = 0;
  [[nodiscard]] virtual TrajectoryKind kind() const = 0;
};

class HoverTrajectory final : public Trajectory {
 public:
  explicit HoverTrajectory(Vector center);
  [[nodiscard]] DesiredPoint at(double t) const override;
  [[nodiscard]] TrajectoryKind kind() const override { return TrajectoryKind::Hover; }

 private:
  Vector center_;
};

/// Piecewise-constant setpoints drawn uniformly in a cube around the center,
/// one per hold interval. Past the last interval the final setpoint holds.
class RandomWalkTrajectory final : public Trajectory {
 public:
  RandomWalkTrajectory(const TrajectoryParams& p, std::uint64_t seed);
  [[nodiscard]] DesiredPoint at(double t) const override;
  [[nodiscard]] TrajectoryKind kind() const override { return TrajectoryKind::RandomWalk; }
  [[nodiscard]] const std::vector<Vector>& setpoints() const noexcept { return setpoints_; }

 private:
  double hold_;
  std::vector<Vector> setpoints_;
};

/// center + (A_x sin ωt, 0, A_z sin 2ωt), ω = 2π/T: a figure 8 in the x–z plane.
class Figure8Trajectory final : public Trajectory {
 public:
  explicit Figure8Trajectory(const TrajectoryParams& p);
  [[nodiscard]] DesiredPoint at(double t) const override;
  [[nodiscard]] TrajectoryKind kind() const override { return TrajectoryKind::Figure8; }

 private:
  Vector center_;
  double omega_;
  double ax_;
  double az_;
};

[[nodiscard]] std::unique_ptr<Trajectory> gen_trajectory(TrajectoryKind kind, const TrajectoryParams& p,
                                                         std::uint64_t seed);

}  // namespace metaadapt::harness
