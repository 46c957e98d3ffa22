#pragma once

// Dense linear algebra shared by every module. Storage is Eigen; the free
// functions here add the shape and finiteness contracts the rest of the
// library relies on.

#include <cstdint>
#include <string>

#include <Eigen/Dense>

namespace metaadapt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Ridge-free solves are rejected when cond(AᵀA) exceeds this.
inline constexpr double kDefaultConditionCap = 1e8;

[[nodiscard]] bool all_finite(const Matrix& m) noexcept;

void require_finite(const Matrix& m, const std::string& what);
void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what);
void require_same_shape(const Matrix& a, const Matrix& b, const std::string& what);

/// argmin_x ‖A x − b‖² + ridge‖x‖² via column-pivoted Householder QR.
///
/// With ridge > 0 the system is augmented with √ridge·I rows, so the
/// explicit normal matrix is never formed. With ridge = 0 the condition
/// number of AᵀA (from the singular values of R) must stay below
/// `condition_cap`, otherwise RankDeficient is thrown.
[[nodiscard]] Matrix solve_least_squares(const Matrix& A, const Matrix& b, double ridge,
                                         double condition_cap = kDefaultConditionCap);

/// cond(AᵀA) = σ_max(A)² / σ_min(A)², infinite when A is rank deficient.
[[nodiscard]] double gram_condition_number(const Matrix& A);

/// Power-iteration estimate of σ_max(W). The starting vector is drawn from
/// `seed`, so the result is deterministic. A zero matrix gives 0.
[[nodiscard]] double spectral_norm(const Matrix& W, int iters, std::uint64_t seed);

[[nodiscard]] Matrix symmetrized(const Matrix& m);

/// Symmetric eigenvalue clamp: V·max(Λ, floor)·Vᵀ.
[[nodiscard]] Matrix floor_eigenvalues(const Matrix& symmetric, double floor);

struct EigenRange {
  double min = 0.0;
  double max = 0.0;
};

[[nodiscard]] EigenRange symmetric_eigen_range(const Matrix& symmetric);

}  // namespace metaadapt
