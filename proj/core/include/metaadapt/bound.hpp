#pragma once

// Exponential tracking/estimation envelope for the composite controller.
// With y = (s, ã) and M = diag(H, P̄⁻¹):
//   ‖y(t)‖ ≤ √κ(M)·‖y(0)‖·e^{−λ_con t} + d̄/(λ_con √λ_min M)·(1 − e^{−λ_con t})
//   λ_con = min[k, (λ/2)(λ_min P̄⁻¹ + γ)] / λ_max M,   k = λ_min K
//   d̄ = ‖(d, Wᵀd₁ + λγa)‖ / √λ_min M
// Eigen-quantities are taken as the worst case over the trace.

#include <vector>

#include "metaadapt/controller.hpp"

namespace metaadapt::adapt {

struct BoundInputs {
  double k = 0.0;           // λ_min(K)
  double lambda = 0.0;
  double gamma = 0.0;
  double h_min = 0.0;       // inf λ_min H
  double h_max = 0.0;       // sup λ_max H
  double pbar_min = 0.0;    // inf λ_min P̄
  double pbar_max = 0.0;    // sup λ_max P̄
  double disturbance = 0.0; // sup ‖(d, Wᵀd₁ + λγa)‖
};

struct BoundConstants {
  double m_min = 0.0;  // λ_min M
  double m_max = 0.0;  // λ_max M
  double kappa = 0.0;  // λ_max M / λ_min M
  double lambda_con = 0.0;
  double d_bar = 0.0;
  double ball_radius = 0.0;      // d̄ / (λ_con √λ_min M), the t → ∞ envelope
  double theorem_radius = 0.0;   // sup κ[H, P̄⁻¹] / min[…] · sup‖·‖
};

[[nodiscard]] BoundConstants bound_constants(const BoundInputs& in);

struct BoundReport {
  BoundInputs inputs;
  BoundConstants constants;
  std::vector<double> t;
  std::vector<double> measured;  // ‖(s, ã)‖
  std::vector<double> envelope;  // restarted at each constant-condition segment
  std::size_t violations = 0;
  double violation_fraction = 0.0;
};

/// Evaluates the envelope against a logged run. The comparison parameter a
/// is the per-segment a* of the log; d₁ = Wa − y₁ uses the logged y₁, so
/// measurement noise enters d̄.
[[nodiscard]] BoundReport theorem_bound(const Gains& gains, const EpisodeLog& log);

}  // namespace metaadapt::adapt
