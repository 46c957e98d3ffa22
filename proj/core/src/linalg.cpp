#include "metaadapt/linalg.hpp"

#include <cmath>
#include <limits>

#include "metaadapt/errors.hpp"
#include "metaadapt/rng.hpp"

namespace metaadapt {

namespace {

std::string shape_string(Eigen::Index r, Eigen::Index c) {
  return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

bool all_finite(const Matrix& m) noexcept { return m.allFinite(); }

void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) fail(ErrorKind::NonFinite, what + " contains NaN or Inf");
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    fail(ErrorKind::ShapeMismatch, what + ": expected " + shape_string(rows, cols) + ", got " +
                                       shape_string(m.rows(), m.cols()));
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, const std::string& what) {
  require_shape(b, a.rows(), a.cols(), what);
}

double gram_condition_number(const Matrix& A) {
  if (A.rows() == 0 || A.cols() == 0) return std::numeric_limits<double>::infinity();
  Eigen::ColPivHouseholderQR<Matrix> qr(A);
  const Eigen::Index p = A.cols();
  if (A.rows() < p) return std::numeric_limits<double>::infinity();
  const Matrix R = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<Matrix> svd(R);
  const Vector& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(p - 1);
  if (smin <= 0.0 || !std::isfinite(smin)) return std::numeric_limits<double>::infinity();
  const double c = smax / smin;
  return c * c;
}

Matrix solve_least_squares(const Matrix& A, const Matrix& b, double ridge, double condition_cap) {
  if (A.rows() < 1 || A.cols() < 1) fail(ErrorKind::ShapeMismatch, "least squares: empty design matrix");
  if (b.rows() != A.rows()) {
    fail(ErrorKind::ShapeMismatch, "least squares: A is " + shape_string(A.rows(), A.cols()) +
                                       " but b is " + shape_string(b.rows(), b.cols()));
  }
  if (!(ridge >= 0.0)) fail(ErrorKind::BadParams, "least squares: ridge must be nonnegative");

  if (ridge == 0.0) {
    const double cond = gram_condition_number(A);
    if (!(cond <= condition_cap)) {
      fail(ErrorKind::RankDeficient,
           "least squares: cond(A^T A) = " + std::to_string(cond) + " exceeds cap " + std::to_string(condition_cap));
    }
    return A.colPivHouseholderQr().solve(b);
  }

  const Eigen::Index K = A.rows();
  const Eigen::Index m = A.cols();
  Matrix aug(K + m, m);
  aug.topRows(K) = A;
  aug.bottomRows(m) = std::sqrt(ridge) * Matrix::Identity(m, m);
  Matrix rhs = Matrix::Zero(K + m, b.cols());
  rhs.topRows(K) = b;
  return aug.colPivHouseholderQr().solve(rhs);
}

double spectral_norm(const Matrix& W, int iters, std::uint64_t seed) {
  if (iters < 1) fail(ErrorKind::BadParams, "spectral_norm: iters must be >= 1");
  if (W.size() == 0) return 0.0;
  Rng rng(seed);
  Vector v(W.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  double vn = v.norm();
  if (vn == 0.0) {
    v.setOnes();
    vn = v.norm();
  }
  v /= vn;
  double sigma = 0.0;
  for (int k = 0; k < iters; ++k) {
    Vector u = W * v;
    const double un = u.norm();
    if (un == 0.0) return sigma;
    Vector w = W.transpose() * (u / un);
    const double wn = w.norm();
    // wn = ‖Wᵀu‖ with u the normalized image; it is a Rayleigh-type lower
    // bound on σ_max that does not decrease with k.
    if (wn == 0.0) return sigma;
    sigma = std::max(sigma, wn);
    v = w / wn;
  }
  return sigma;
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix floor_eigenvalues(const Matrix& symmetric, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric);
  const Vector& ev = es.eigenvalues();
  if (ev.minCoeff() >= floor) return symmetric;
  const Vector clamped = ev.cwiseMax(floor);
  return es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().transpose();
}

EigenRange symmetric_eigen_range(const Matrix& symmetric) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetric, Eigen::EigenvaluesOnly);
  const Vector& ev = es.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

}  // namespace metaadapt
