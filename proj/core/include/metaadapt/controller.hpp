#pragma once

// Regularized composite adaptive controller:
//   τ  = H q̈_r + C q̇_r + g + φâ − K s
//   â̇  = −P̄ (φᵀs + Wᵀe₁ + λγâ),   e₁ = Wâ − y₁
//   P̄̇  = (λI − λγP̄ − P̄WᵀW) P̄
// with W and y₁ the first-order-filtered regressor and force measurement.

#include <cstdint>
#include <vector>

#include "metaadapt/filter.hpp"
#include "metaadapt/kernel_model.hpp"
#include "metaadapt/plant.hpp"
#include "metaadapt/trajectory.hpp"
#include "metaadapt/wind.hpp"

namespace metaadapt::adapt {

using harness::DesiredPoint;

struct Gains {
  Matrix Lambda;  // 1/s
  Matrix K;       // N·s/m
  double lambda = 0.5;  // forgetting rate, 1/s
  double gamma = 0.01;
  double filter_tc = 0.2;  // s
  double pbar_cap = 1e8;   // CovarianceDivergence above this λ_max(P̄)
  double eig_floor = 1e-10;

  /// Λ = lambda_s·I, K = k·I.
  static Gains diagonal(Eigen::Index n, double lambda_s = 2.0, double k = 4.0);
  void validate() const;
  [[nodiscard]] Eigen::Index dim() const noexcept { return Lambda.rows(); }
};

struct TrackingState {
  Vector q_err;      // q̃ = q − q_d
  Vector q_err_dot;  // q̃̇
  Vector s;          // q̃̇ + Λq̃
  Vector qdot_r;     // q̇ − s
  Vector qddot_r;    // q̈_d − Λq̃̇

  static TrackingState compute(const dynamics::State& x, const DesiredPoint& d, const Gains& g);
};

/// τ for a regressor φ already evaluated at x.
[[nodiscard]] Vector control_law(const dynamics::PlantModel& plant, const dynamics::State& x,
                                 const TrackingState& track, const Matrix& phi, const Vector& a_hat,
                                 const Gains& gains);
[[nodiscard]] Vector control_law(const dynamics::PlantModel& plant, const dynamics::State& x,
                                 const DesiredPoint& desired, const Vector& a_hat,
                                 const kernels::KernelModel& model, const Gains& gains);

class AdaptiveState {
 public:
  /// â = 0, P̄ = I/γ, W = 0, y₁ = 0.
  AdaptiveState(Eigen::Index n, Eigen::Index p, const Gains& gains);

  Vector a_hat;
  Matrix pbar;

  [[nodiscard]] const Matrix& W() const noexcept { return w_filter_.state(); }
  [[nodiscard]] const Matrix& y1() const noexcept { return y_filter_.state(); }
  [[nodiscard]] Vector e1() const;

  friend AdaptiveState update_filters(AdaptiveState adapt, const Matrix& phi, const Vector& y, double dt);

 private:
  FirstOrderFilter w_filter_;
  FirstOrderFilter y_filter_;
};

/// Advances W ← filter(φ) and y₁ ← filter(y) by one zero-order-hold step.
[[nodiscard]] AdaptiveState update_filters(AdaptiveState adapt, const Matrix& phi, const Vector& y, double dt);

/// One RK4 step of the coupled (â, P̄) equations with s, φ, W, y₁ held, e₁
/// re-evaluated at each stage. P̄ is then symmetrized and eigenvalue-floored.
[[nodiscard]] AdaptiveState adaptation_step(AdaptiveState adapt, const Vector& s, const Matrix& phi,
                                            const Gains& gains, double dt);

/// Realizable disturbance f = φ(q, q̇)·a₀ for a fixed kernel model.
class KernelField final : public dynamics::DisturbanceField {
 public:
  KernelField(kernels::KernelModel model, Vector a0);
  [[nodiscard]] Vector force(const dynamics::State& x, double t) const override;

 private:
  kernels::KernelModel model_;
  Vector a0_;
};

struct RunOptions {
  double noise_sigma = 0.05;        // N, on the measured-force channel
  Vector initial_offset;            // q(0) − q_d(0); empty = zero
  Vector initial_velocity;          // empty = q̇_d(0)
  Vector a_hat0;                    // empty = zero
  bool record_covariance = false;   // keep the full P̄ per step
};

struct EpisodeStep {
  double t = 0.0;
  std::size_t segment = 0;
  Vector q, qdot;
  Vector q_d, qdot_d, qddot_d;
  Vector s;
  Vector tau;
  Vector f;      // ground truth, logger only
  Vector y;      // measured force seen by the controller
  Vector qddot;  // effective acceleration over the step
  Vector a_hat;
  Vector a_tilde;            // â − a*(segment)
  Vector pred_error;         // φâ − f
  double d = 0.0;            // ‖φa* − f‖
  double pbar_min = 0.0;
  double pbar_max = 0.0;
  Matrix phi;
  Matrix W;
  Vector y1;
};

struct EpisodeLog {
  double dt = 0.0;
  std::uint64_t seed = 0;
  std::vector<EpisodeStep> steps;
  std::vector<double> segment_starts;
  std::vector<Vector> segment_a_star;  // representation_error fit per segment
  std::vector<Matrix> pbar;            // only with record_covariance
  double h_min = 0.0;                  // extreme eigenvalues of H(q) along the run
  double h_max = 0.0;
};

/// Closed loop at rate 1/dt over [0, t_f). Per step k: φ_k, τ_k; plant RK4
/// step; y_k from the acceleration residual; filters; adaptation.
[[nodiscard]] EpisodeLog run_controller(const dynamics::PlantModel& plant, const kernels::KernelModel& model,
                                        const Gains& gains, const harness::Trajectory& trajectory,
                                        const dynamics::DisturbanceField& field, double t_final, double dt,
                                        std::uint64_t seed, const RunOptions& options = {});

}  // namespace metaadapt::adapt
