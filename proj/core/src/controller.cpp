#include "metaadapt/controller.hpp"

#include <cmath>

#include "metaadapt/dataset.hpp"
#include "metaadapt/errors.hpp"
#include "metaadapt/ode.hpp"
#include "metaadapt/rng.hpp"

namespace metaadapt::adapt {

using dynamics::State;

namespace {

bool is_spd(const Matrix& m) {
  if (m.rows() != m.cols() || !m.allFinite()) return false;
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  return Eigen::LLT<Matrix>(m).info() == Eigen::Success;
}

}  // namespace

Gains Gains::diagonal(Eigen::Index n, double lambda_s, double k) {
  Gains g;
  g.Lambda = lambda_s * Matrix::Identity(n, n);
  g.K = k * Matrix::Identity(n, n);
  return g;
}

void Gains::validate() const {
  require(Lambda.rows() > 0 && is_spd(Lambda), ErrorKind::BadParams, "Λ must be symmetric positive definite");
  require(K.rows() == Lambda.rows() && is_spd(K), ErrorKind::BadParams, "K must be symmetric positive definite");
  require(lambda > 0.0 && gamma > 0.0 && filter_tc > 0.0, ErrorKind::BadParams, "λ, γ and T_f must be positive");
  require(pbar_cap > 0.0 && eig_floor > 0.0, ErrorKind::BadParams, "P̄ cap and eigenvalue floor must be positive");
}

TrackingState TrackingState::compute(const State& x, const DesiredPoint& d, const Gains& g) {
  TrackingState t;
  t.q_err = x.q - d.q;
  t.q_err_dot = x.qdot - d.qdot;
  t.s = t.q_err_dot + g.Lambda * t.q_err;
  t.qdot_r = x.qdot - t.s;
  t.qddot_r = d.qddot - g.Lambda * t.q_err_dot;
  return t;
}

Vector control_law(const dynamics::PlantModel& plant, const State& x, const TrackingState& track, const Matrix& phi,
                   const Vector& a_hat, const Gains& gains) {
  require(phi.cols() == a_hat.size() && phi.rows() == x.dim(), ErrorKind::ShapeMismatch, "control_law: φ vs â");
  return plant.inertia(x.q) * track.qddot_r + plant.coriolis(x.q, x.qdot) * track.qdot_r + plant.gravity(x.q) +
         phi * a_hat - gains.K * track.s;
}

Vector control_law(const dynamics::PlantModel& plant, const State& x, const DesiredPoint& desired,
                   const Vector& a_hat, const kernels::KernelModel& model, const Gains& gains) {
  return control_law(plant, x, TrackingState::compute(x, desired, gains), model.eval(x), a_hat, gains);
}

AdaptiveState::AdaptiveState(Eigen::Index n, Eigen::Index p, const Gains& gains)
    : a_hat(Vector::Zero(p)),
      pbar(Matrix::Identity(p, p) / gains.gamma),
      w_filter_(gains.filter_tc, n, p),
      y_filter_(gains.filter_tc, n, 1) {}

Vector AdaptiveState::e1() const { return W() * a_hat - y1(); }

AdaptiveState update_filters(AdaptiveState adapt, const Matrix& phi, const Vector& y, double dt) {
  require_finite(phi, "update_filters: φ");
  require_finite(y, "update_filters: y");
  adapt.w_filter_.update(phi, dt);
  adapt.y_filter_.update(y, dt);
  return adapt;
}

AdaptiveState adaptation_step(AdaptiveState adapt, const Vector& s, const Matrix& phi, const Gains& gains,
                              double dt) {
  const Eigen::Index p = adapt.a_hat.size();
  const Matrix& W = adapt.W();
  const Vector y1 = adapt.y1();
  require(phi.cols() == p && s.size() == phi.rows(), ErrorKind::ShapeMismatch, "adaptation_step: φ, s, â");
  require(W.cols() == p && W.rows() == phi.rows(), ErrorKind::ShapeMismatch, "adaptation_step: W");

  const Vector phit_s = phi.transpose() * s;
  const Matrix WtW = W.transpose() * W;
  const Vector Wt_y1 = W.transpose() * y1;
  const double lg = gains.lambda * gains.gamma;
  const Matrix I = Matrix::Identity(p, p);

  auto field = [&](const Vector& z) {
    const Eigen::Map<const Vector> a(z.data(), p);
    const Eigen::Map<const Matrix> P(z.data() + p, p, p);
    Vector dz(z.size());
    dz.head(p) = -P * (phit_s + WtW * a - Wt_y1 + lg * a);
    Eigen::Map<Matrix>(dz.data() + p, p, p) = (gains.lambda * I - lg * P - P * WtW) * P;
    return dz;
  };

  Vector z(p + p * p);
  z.head(p) = adapt.a_hat;
  Eigen::Map<Matrix>(z.data() + p, p, p) = adapt.pbar;
  z = integrate_step(field, z, dt);

  adapt.a_hat = z.head(p);
  adapt.pbar = floor_eigenvalues(symmetrized(Eigen::Map<const Matrix>(z.data() + p, p, p)), gains.eig_floor);
  const EigenRange r = symmetric_eigen_range(adapt.pbar);
  require(r.max <= gains.pbar_cap, ErrorKind::CovarianceDivergence,
          "λ_max(P̄) = " + std::to_string(r.max) + " exceeds cap " + std::to_string(gains.pbar_cap));
  return adapt;
}

KernelField::KernelField(kernels::KernelModel model, Vector a0) : model_(std::move(model)), a0_(std::move(a0)) {
  require(a0_.size() == model_.coefficient_count(), ErrorKind::ShapeMismatch, "KernelField: a₀ size");
}

Vector KernelField::force(const State& x, double) const { return model_.eval(x) * a0_; }

EpisodeLog run_controller(const dynamics::PlantModel& plant, const kernels::KernelModel& model, const Gains& gains,
                          const harness::Trajectory& trajectory, const dynamics::DisturbanceField& field,
                          double t_final, double dt, std::uint64_t seed, const RunOptions& options) {
  gains.validate();
  model.validate();
  require(dt > 0.0 && t_final > 0.0, ErrorKind::BadParams, "run_controller: dt and t_f must be positive");
  require(options.noise_sigma >= 0.0, ErrorKind::BadParams, "noise σ must be nonnegative");
  const Eigen::Index n = plant.dof();
  const Eigen::Index p = model.coefficient_count();
  require(gains.dim() == n && model.output_dim() == n, ErrorKind::ShapeMismatch, "gains/model vs plant dof");

  const auto steps = static_cast<std::size_t>(std::llround(t_final / dt));
  EpisodeLog log;
  log.dt = dt;
  log.seed = seed;
  log.segment_starts = field.segment_starts();
  log.steps.reserve(steps);

  const DesiredPoint d0 = trajectory.at(0.0);
  State x{d0.q, d0.qdot};
  if (options.initial_offset.size() > 0) x.q += options.initial_offset;
  if (options.initial_velocity.size() > 0) x.qdot = options.initial_velocity;

  AdaptiveState adapt(n, p, gains);
  if (options.a_hat0.size() > 0) {
    require(options.a_hat0.size() == p, ErrorKind::ShapeMismatch, "initial â size");
    adapt.a_hat = options.a_hat0;
  }

  Rng noise(mix_seed(seed, 0x5E45));
  log.h_min = std::numeric_limits<double>::infinity();
  log.h_max = 0.0;
  std::size_t segment = 0;

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    while (segment + 1 < log.segment_starts.size() && t >= log.segment_starts[segment + 1]) ++segment;

    const DesiredPoint des = trajectory.at(t);
    const TrackingState track = TrackingState::compute(x, des, gains);
    const Matrix phi = model.eval(x);
    const Vector tau = control_law(plant, x, track, phi, adapt.a_hat, gains);
    const Vector f = field.force(x, t);

    const State next = dynamics::step_plant(plant, x, tau, field, t, dt);
    const Vector qddot = (next.qdot - x.qdot) / dt;
    Vector y = plant.force_residual(x, qddot, tau);
    if (options.noise_sigma > 0.0)
      for (Eigen::Index i = 0; i < n; ++i) y(i) += noise.normal(0.0, options.noise_sigma);

    const EigenRange pr = symmetric_eigen_range(adapt.pbar);
    const EigenRange hr = symmetric_eigen_range(plant.inertia(x.q));
    log.h_min = std::min(log.h_min, hr.min);
    log.h_max = std::max(log.h_max, hr.max);

    EpisodeStep rec;
    rec.t = t;
    rec.segment = segment;
    rec.q = x.q;
    rec.qdot = x.qdot;
    rec.q_d = des.q;
    rec.qdot_d = des.qdot;
    rec.qddot_d = des.qddot;
    rec.s = track.s;
    rec.tau = tau;
    rec.f = f;
    rec.y = y;
    rec.qddot = qddot;
    rec.a_hat = adapt.a_hat;
    rec.pred_error = phi * adapt.a_hat - f;
    rec.pbar_min = pr.min;
    rec.pbar_max = pr.max;
    rec.phi = phi;
    rec.W = adapt.W();
    rec.y1 = adapt.y1();
    if (options.record_covariance) log.pbar.push_back(adapt.pbar);
    log.steps.push_back(std::move(rec));

    adapt = update_filters(std::move(adapt), phi, y, dt);
    adapt = adaptation_step(std::move(adapt), track.s, phi, gains, dt);
    x = next;
  }

  // Trajectory-optimal comparison parameter per constant-condition segment.
  const std::size_t segments = std::max<std::size_t>(1, log.segment_starts.size());
  std::vector<std::vector<Sample>> by_segment(segments);
  for (const auto& r : log.steps) by_segment[std::min(r.segment, segments - 1)].push_back({r.t, r.q, r.qdot, r.f});
  log.segment_a_star.assign(segments, Vector::Zero(p));
  for (std::size_t i = 0; i < segments; ++i)
    if (!by_segment[i].empty()) log.segment_a_star[i] = kernels::representation_error(model, by_segment[i]).a;
  for (auto& r : log.steps) {
    const Vector& a_star = log.segment_a_star[std::min(r.segment, segments - 1)];
    r.a_tilde = r.a_hat - a_star;
    r.d = (r.phi * a_star - r.f).norm();
  }
  return log;
}

}  // namespace metaadapt::adapt
