#include "metaadapt/trajectory.hpp"

#include <cmath>
#include <numbers>

#include "metaadapt/errors.hpp"
#include "metaadapt/rng.hpp"

namespace metaadapt::harness {

std::string to_string(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::Hover: return "hover";
    case TrajectoryKind::RandomWalk: return "randomwalk";
    case TrajectoryKind::Figure8: return "fig8";
  }
  return "?";
}

TrajectoryKind parse_trajectory(const std::string& s) {
  if (s == "hover") return TrajectoryKind::Hover;
  if (s == "randomwalk") return TrajectoryKind::RandomWalk;
  if (s == "fig8") return TrajectoryKind::Figure8;
  fail(ErrorKind::BadParams, "unknown trajectory '" + s + "' (expected hover|randomwalk|fig8)");
}

void TrajectoryParams::validate(TrajectoryKind kind) const {
  require(center.size() == 3 && center.allFinite(), ErrorKind::BadParams, "trajectory center must be a finite 3-vector");
  switch (kind) {
    case TrajectoryKind::Hover: break;
    case TrajectoryKind::RandomWalk:
      require(half_width > 0.0, ErrorKind::BadParams, "cube half-width must be positive");
      require(hold > 0.0, ErrorKind::BadParams, "setpoint hold interval must be positive");
      require(duration > 0.0, ErrorKind::BadParams, "random-walk duration must be positive");
      break;
    case TrajectoryKind::Figure8:
      require(period > 0.0, ErrorKind::BadParams, "figure-8 period must be positive");
      require(std::isfinite(amplitude_x) && std::isfinite(amplitude_z), ErrorKind::BadParams,
              "figure-8 amplitudes must be finite");
      break;
  }
}

HoverTrajectory::HoverTrajectory(Vector center) : center_(std::move(center)) {}

DesiredPoint HoverTrajectory::at(double) const {
  return {center_, Vector::Zero(center_.size()), Vector::Zero(center_.size())};
}

RandomWalkTrajectory::RandomWalkTrajectory(const TrajectoryParams& p, std::uint64_t seed) : hold_(p.hold) {
  p.validate(TrajectoryKind::RandomWalk);
  const auto count = static_cast<std::size_t>(std::ceil(p.duration / p.hold - 1e-9));
  Rng rng(seed);
  setpoints_.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Vector q = p.center;
    for (Eigen::Index j = 0; j < q.size(); ++j) q(j) += rng.uniform(-p.half_width, p.half_width);
    setpoints_.push_back(std::move(q));
  }
}

DesiredPoint RandomWalkTrajectory::at(double t) const {
  const double k = std::floor(std::max(t, 0.0) / hold_);
  const auto idx = std::min(static_cast<std::size_t>(k), setpoints_.size() - 1);
  const Vector& q = setpoints_[idx];
  return {q, Vector::Zero(q.size()), Vector::Zero(q.size())};
}

Figure8Trajectory::Figure8Trajectory(const TrajectoryParams& p)
    : center_(p.center), omega_(2.0 * std::numbers::pi / p.period), ax_(p.amplitude_x), az_(p.amplitude_z) {
  p.validate(TrajectoryKind::Figure8);
}

DesiredPoint Figure8Trajectory::at(double t) const {
  const double w = omega_;
  // Reduce the phase so that q_d(t + T) reproduces q_d(t) bit for bit.
  const double period = 2.0 * std::numbers::pi / w;
  const double tau = t - period * std::floor(t / period);
  const double s1 = std::sin(w * tau), c1 = std::cos(w * tau);
  const double s2 = std::sin(2.0 * w * tau), c2 = std::cos(2.0 * w * tau);
  DesiredPoint d{center_, Vector::Zero(3), Vector::Zero(3)};
  d.q(0) += ax_ * s1;
  d.q(2) += az_ * s2;
  d.qdot(0) = ax_ * w * c1;
  d.qdot(2) = 2.0 * az_ * w * c2;
  d.qddot(0) = -ax_ * w * w * s1;
  d.qddot(2) = -4.0 * az_ * w * w * s2;
  return d;
}

std::unique_ptr<Trajectory> gen_trajectory(TrajectoryKind kind, const TrajectoryParams& p, std::uint64_t seed) {
  p.validate(kind);
  switch (kind) {
    case TrajectoryKind::Hover: return std::make_unique<HoverTrajectory>(p.center);
    case TrajectoryKind::RandomWalk: return std::make_unique<RandomWalkTrajectory>(p, seed);
    case TrajectoryKind::Figure8: return std::make_unique<Figure8Trajectory>(p);
  }
  fail(ErrorKind::BadParams, "unknown trajectory kind");
}

}  // namespace metaadapt::harness
