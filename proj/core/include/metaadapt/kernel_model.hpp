#pragma once

// Neural-network regressors φ(q, q̇; Θ) whose linear combination φ·a models
// the disturbance. Three formulations share one interface:
//
//   Constant  φ ≡ I_n, a ∈ ℝⁿ (integral-action baseline)
//   Vector    m networks ℝ²ⁿ → ℝⁿ; column i of φ is network i; a ∈ ℝᵐ
//   Scalar    one trunk ℝ²ⁿ → ℝᵐ; φ = blockdiag(hᵀ, …, hᵀ); a ∈ ℝᵐⁿ laid
//             out as (a_x ‖ a_y ‖ …), one length-m block per output axis
//
// Hidden layers use tanh; the output layer of each network is linear.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "metaadapt/dataset.hpp"
#include "metaadapt/linalg.hpp"
#include "metaadapt/plant.hpp"

namespace metaadapt::kernels {

enum class Formulation { Constant, Vector, Scalar };

[[nodiscard]] std::string to_string(Formulation f);
[[nodiscard]] Formulation parse_formulation(const std::string& s);

struct DenseLayer {
  Matrix weight;  // out × in
  Vector bias;    // out
};

struct Network {
  std::vector<DenseLayer> layers;

  [[nodiscard]] Eigen::Index input_dim() const { return layers.front().weight.cols(); }
  [[nodiscard]] Eigen::Index output_dim() const { return layers.back().weight.rows(); }
};

/// Θ as a list of networks. Gradients use the same layout.
using Parameters = std::vector<Network>;

/// x_std = (x − mean) ⊘ scale, applied to the stacked (q, q̇) input.
struct Standardization {
  Vector mean;
  Vector scale;

  static Standardization identity(Eigen::Index dim);
  /// Per-channel mean and standard deviation; channels with spread below
  /// 1e-6 keep unit scale.
  static Standardization fit(const Matrix& inputs);
  [[nodiscard]] Matrix apply(const Matrix& inputs) const;
};

struct Architecture {
  std::vector<Eigen::Index> hidden{32, 32};
  Eigen::Index kernel_count = 10;  // m
  double sigma_bar = 2.0;          // per-layer spectral bound
  int power_iters = 200;
};

class KernelModel {
 public:
  static KernelModel constant(Eigen::Index n);
  /// Random Θ₀: per-layer uniform in ±1/√fan-in, then normalized.
  static KernelModel random(Formulation f, Eigen::Index n, const Architecture& arch, std::uint64_t seed);
  /// Assembles a model from explicit parts and validates them.
  static KernelModel from_parts(Formulation f, Eigen::Index n, Eigen::Index m, Parameters networks,
                                Standardization standardization, double sigma_bar, int power_iters);

  [[nodiscard]] Formulation formulation() const noexcept { return formulation_; }
  [[nodiscard]] Eigen::Index output_dim() const noexcept { return n_; }
  /// m: networks for Vector, trunk width for Scalar, n for Constant.
  [[nodiscard]] Eigen::Index kernel_count() const noexcept { return m_; }
  /// dim(a).
  [[nodiscard]] Eigen::Index coefficient_count() const noexcept;
  [[nodiscard]] double sigma_bar() const noexcept { return sigma_bar_; }
  [[nodiscard]] int power_iters() const noexcept { return power_iters_; }

  [[nodiscard]] const Parameters& networks() const noexcept { return networks_; }
  [[nodiscard]] const Standardization& standardization() const noexcept { return standardization_; }

  [[nodiscard]] KernelModel with_parameters(Parameters p) const;
  [[nodiscard]] KernelModel with_standardization(Standardization s) const;

  /// n × dim(a) regressor at one state.
  [[nodiscard]] Matrix eval(const dynamics::State& x) const;

  void validate() const;

 private:
  KernelModel() = default;

  Formulation formulation_ = Formulation::Constant;
  Eigen::Index n_ = 0;
  Eigen::Index m_ = 0;
  Parameters networks_;
  Standardization standardization_;
  double sigma_bar_ = 1.0;
  int power_iters_ = 200;
};

/// φ evaluated on a batch of N inputs, kept in compact form.
class FeatureBatch {
 public:
  FeatureBatch(Formulation f, Eigen::Index n, Eigen::Index m, Eigen::Index count,
               std::vector<Matrix> vector_outputs, Matrix scalar_features);

  [[nodiscard]] Eigen::Index count() const noexcept { return count_; }
  [[nodiscard]] Eigen::Index coefficient_count() const noexcept;
  /// Stacked Φ, (N·n) × dim(a); row k·n + j is output axis j of sample k.
  [[nodiscard]] Matrix regressor() const;
  /// φ_k a for every sample: n × N.
  [[nodiscard]] Matrix predict(const Vector& a) const;
  /// n × dim(a) regressor of sample k.
  [[nodiscard]] Matrix at(Eigen::Index k) const;

 private:
  Formulation formulation_;
  Eigen::Index n_, m_, count_;
  std::vector<Matrix> vector_outputs_;  // Vector: m matrices, n × N
  Matrix scalar_features_;              // Scalar: m × N
};

/// Forward pass with the activations retained for backpropagation.
struct ForwardPass {
  std::vector<std::vector<Matrix>> activations;  // per network: input, hidden..., output
  FeatureBatch features;
};

[[nodiscard]] FeatureBatch features(const KernelModel& model, const Matrix& raw_inputs);
[[nodiscard]] ForwardPass forward(const KernelModel& model, const Matrix& raw_inputs);

/// Upstream gradient ∂L/∂φ_k = Σ_t u_t[:, k] · v_tᵀ, with u_t ∈ ℝ^{n×N} and
/// v_t ∈ ℝ^{dim(a)}. Every loss used in training has this low-rank form.
struct CotangentTerm {
  Matrix u;
  Vector v;
};

/// ∂L/∂Θ for a loss whose dependence on Θ runs only through φ.
[[nodiscard]] Parameters backprop(const KernelModel& model, const ForwardPass& pass,
                                  std::span<const CotangentTerm> terms);

/// ∂/∂Θ ‖residual‖² at one state with a held fixed, where residual = φa − f.
[[nodiscard]] Parameters kernel_jacobian_theta(const KernelModel& model, const dynamics::State& x, const Vector& a,
                                               const Vector& residual);

/// Rescales every weight matrix whose power-iteration norm exceeds σ̄ down to
/// σ̄. Biases are left alone. Idempotent; a no-op returns the model unchanged.
[[nodiscard]] KernelModel normalize(const KernelModel& model);

/// Largest power-iteration layer norm of each network, per network.
[[nodiscard]] std::vector<std::vector<double>> layer_norms(const KernelModel& model);

/// Upper bound on ‖φ(x₁) − φ(x₂)‖_F / ‖x₁ − x₂‖ in raw (q, q̇) coordinates:
/// products of layer norms (tanh is 1-Lipschitz), the standardization gain,
/// and the √m / √n stacking factors.
[[nodiscard]] double lipschitz_bound(const KernelModel& model);

/// Fitted coefficients together with the ridge that was actually used.
struct CoefficientFit {
  Vector a;
  double ridge = 0.0;
};

/// Least-squares a for forces ≈ φ a over a feature batch. A ridge-free solve
/// is tried first (unless `ridge` > 0); singular batches fall back to
/// `fallback_ridge`.
[[nodiscard]] CoefficientFit fit_coefficients(const FeatureBatch& phi, const Matrix& forces, double ridge = 0.0,
                                             double fallback_ridge = 1e-9);

struct RepresentationError {
  Vector a;       // a*: least-squares fit over the whole sample set
  double d = 0.0; // max_k ‖φ_k a* − f_k‖
  Vector pointwise;  // ‖φ_k a* − f_k‖ per sample
};

[[nodiscard]] RepresentationError representation_error(const KernelModel& model, std::span<const Sample> samples);

// Flat views used by optimizers and finite-difference tests.
[[nodiscard]] Vector flatten(const Parameters& p);
[[nodiscard]] Parameters unflatten(const Parameters& layout, const Vector& flat);
[[nodiscard]] Parameters zeros_like(const Parameters& p);
[[nodiscard]] std::size_t parameter_count(const Parameters& p);

}  // namespace metaadapt::kernels
