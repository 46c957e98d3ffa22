#include <cmath>

#include <gtest/gtest.h>

#include "metaadapt/errors.hpp"
#include "metaadapt/filter.hpp"
#include "metaadapt/linalg.hpp"
#include "metaadapt/ode.hpp"
#include "metaadapt/rng.hpp"
#include "oracles.hpp"

using namespace metaadapt;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::Io;
}

}  // namespace

TEST(LeastSquares, IdentitySystem) {
  const Vector b = (Vector(3) << 1, 2, 3).finished();
  const Matrix a = solve_least_squares(Matrix::Identity(3, 3), b, 0.0);
  EXPECT_NEAR((a - b).norm(), 0.0, 1e-14);
}

TEST(LeastSquares, TwoEquationsOneUnknown) {
  const Matrix A = (Matrix(2, 1) << 1, 1).finished();
  const Vector b = (Vector(2) << 1, 3).finished();
  EXPECT_NEAR(solve_least_squares(A, b, 0.0)(0, 0), 2.0, 1e-14);
}

TEST(LeastSquares, NormalEquationResidual) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix A = oracle::random_matrix(rng, 20, 4);
    const Matrix b = oracle::random_matrix(rng, 20, 1);
    const Matrix x = solve_least_squares(A, b, 0.0);
    EXPECT_LE((A.transpose() * (A * x - b)).norm(), 1e-8 * (A.transpose() * b).norm());
  }
}

TEST(LeastSquares, MatchesGaussianEliminationOracle) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix A = oracle::random_matrix(rng, 30, 6);
    const Matrix b = oracle::random_matrix(rng, 30, 2);
    ASSERT_LT(std::sqrt(gram_condition_number(A)), 1e4);
    const Matrix x = solve_least_squares(A, b, 0.0);
    const Matrix ref = oracle::normal_equations(A, b);
    EXPECT_LE((x - ref).norm(), 1e-6 * ref.norm());
  }
}

TEST(LeastSquares, RidgeMatchesOracleAndShrinks) {
  Rng rng(13);
  const Matrix A = oracle::random_matrix(rng, 15, 5);
  const Matrix b = oracle::random_matrix(rng, 15, 1);
  double previous = std::numeric_limits<double>::infinity();
  for (double ridge : {0.0, 1e-3, 1e-1, 1.0, 10.0, 100.0}) {
    const Matrix x = solve_least_squares(A, b, ridge);
    const Matrix ref = oracle::normal_equations(A, b, ridge);
    EXPECT_LE((x - ref).norm(), 1e-9 * std::max(1.0, ref.norm()));
    EXPECT_LE((A.transpose() * (A * x - b) + ridge * x).norm(), 1e-9);
    EXPECT_LE(x.norm(), previous + 1e-12);
    previous = x.norm();
  }
}

TEST(LeastSquares, RankDeficientWithoutRidge) {
  Matrix A(4, 2);
  A << 1, 2, 2, 4, 3, 6, 4, 8;
  const Vector b = Vector::Ones(4);
  EXPECT_EQ(kind_of([&] { (void)solve_least_squares(A, b, 0.0); }), ErrorKind::RankDeficient);
  EXPECT_NO_THROW((void)solve_least_squares(A, b, 1e-9));
}

TEST(LeastSquares, ShapeMismatch) {
  EXPECT_EQ(kind_of([] { (void)solve_least_squares(Matrix::Identity(3, 3), Vector::Ones(4), 0.0); }),
            ErrorKind::ShapeMismatch);
  EXPECT_EQ(kind_of([] { (void)solve_least_squares(Matrix::Identity(3, 3), Vector::Ones(3), -1.0); }),
            ErrorKind::BadParams);
}

TEST(Rk4, ConstantField) {
  const Vector x = Vector::Constant(1, 5.0);
  const Vector y = integrate_step([](const Vector& v) { return Vector::Zero(v.size()); }, x, 0.01);
  EXPECT_EQ(y(0), 5.0);
}

TEST(Rk4, ExponentialDecay) {
  auto f = [](const Vector& v) { return Vector(-v); };
  const Vector one = Vector::Ones(1);
  EXPECT_NEAR(integrate_step(f, one, 0.1)(0), std::exp(-0.1), 1e-6);
  Vector x = one;
  for (int i = 0; i < 1000; ++i) x = integrate_step(f, x, 0.001);
  EXPECT_NEAR(x(0), std::exp(-1.0), 1e-9);
}

TEST(Rk4, FourthOrderConvergence) {
  const double lam = 3.0;
  auto f = [lam](const Vector& v) { return Vector(-lam * v); };
  auto err = [&](int steps) {
    Vector x = Vector::Ones(1);
    for (int i = 0; i < steps; ++i) x = integrate_step(f, x, 1.0 / steps);
    return std::abs(x(0) - std::exp(-lam));
  };
  const double ratio = err(50) / err(100);
  EXPECT_NEAR(ratio, 16.0, 1.0);
}

TEST(Rk4, HeldInputAndErrors) {
  auto f = [](const Vector&, const Vector& u) { return u; };
  const Vector y = integrate_step(f, Vector::Zero(2), Vector::Ones(2), 0.5);
  EXPECT_NEAR((y - Vector::Constant(2, 0.5)).norm(), 0.0, 1e-15);
  EXPECT_EQ(kind_of([&] { (void)integrate_step(f, Vector::Zero(2), Vector::Ones(2), 0.0); }), ErrorKind::BadParams);
  auto blow = [](const Vector& v) { return Vector(v.array().square() * 1e200); };
  EXPECT_EQ(kind_of([&] { (void)integrate_step(blow, Vector::Constant(1, 1e200), 1.0); }), ErrorKind::NonFinite);
}

TEST(Filter, StepResponseAndDcGain) {
  FirstOrderFilter flt(1.0);
  EXPECT_NEAR(flt.update(Matrix::Ones(1, 1), 1.0)(0, 0), 1.0 - std::exp(-1.0), 1e-15);
  FirstOrderFilter slow(1.0);
  for (int i = 0; i < 100; ++i) slow.update(Matrix::Ones(1, 1), 1.0);
  EXPECT_NEAR(slow.state()(0, 0), 1.0, 1e-15);
  FirstOrderFilter big_step(1.0);
  EXPECT_NEAR(big_step.update(Matrix::Ones(1, 1), 1e3)(0, 0), 1.0, 1e-15);
}

TEST(Filter, FixedPointAndLinearity) {
  FirstOrderFilter a(0.3), b(0.3), sum(0.3);
  Rng rng(3);
  Matrix last;
  for (int i = 0; i < 50; ++i) {
    const Matrix u1 = oracle::random_matrix(rng, 3, 4);
    const Matrix u2 = oracle::random_matrix(rng, 3, 4);
    a.update(u1, 0.01);
    b.update(u2, 0.01);
    sum.update(u1 + u2, 0.01);
  }
  EXPECT_LE((sum.state() - a.state() - b.state()).cwiseAbs().maxCoeff(), 1e-14);
  const Matrix x = a.state();
  a.update(x, 0.01);
  EXPECT_LE((a.state() - x).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Filter, ShapeFixedAfterFirstUpdate) {
  FirstOrderFilter flt(0.2);
  EXPECT_FALSE(flt.shaped());
  flt.update(Matrix::Ones(3, 2), 0.01);
  EXPECT_TRUE(flt.shaped());
  EXPECT_EQ(kind_of([&] { flt.update(Matrix::Ones(2, 3), 0.01); }), ErrorKind::ShapeMismatch);
  FirstOrderFilter fixed(0.2, 3, 1);
  EXPECT_EQ(kind_of([&] { fixed.update(Matrix::Ones(4, 1), 0.01); }), ErrorKind::ShapeMismatch);
}

TEST(SpectralNorm, Examples) {
  EXPECT_NEAR(spectral_norm(Vector(Vector::Ones(2) + Vector::Unit(2, 0)).asDiagonal().toDenseMatrix(), 50, 1), 2.0,
              1e-6);
  EXPECT_NEAR(spectral_norm(Matrix::Identity(4, 4), 10, 1), 1.0, 1e-12);
  Rng rng(5);
  Vector u = oracle::random_matrix(rng, 5, 1);
  Vector v = oracle::random_matrix(rng, 3, 1);
  u.normalize();
  v.normalize();
  EXPECT_NEAR(spectral_norm(u * v.transpose(), 20, 2), 1.0, 1e-6);
  EXPECT_EQ(spectral_norm(Matrix::Zero(3, 3), 10, 1), 0.0);
}

TEST(SpectralNorm, MonotoneDeterministicAndMatchesJacobi) {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix W = oracle::random_matrix(rng, 8, 6);
    double previous = 0.0;
    for (int iters : {1, 2, 4, 8, 16, 64, 256}) {
      const double s = spectral_norm(W, iters, 9);
      EXPECT_GE(s, previous - 1e-12);
      previous = s;
    }
    EXPECT_EQ(spectral_norm(W, 30, 9), spectral_norm(W, 30, 9));
    EXPECT_NEAR(spectral_norm(W, 2000, 9), oracle::sigma_max_jacobi(W), 1e-8);
  }
}

TEST(Eigen, FloorAndSymmetrize) {
  Matrix m(2, 2);
  m << 1, 0.5, 0.3, -1;
  const Matrix s = symmetrized(m);
  EXPECT_EQ(s(0, 1), s(1, 0));
  const Matrix f = floor_eigenvalues(s, 1e-3);
  const EigenRange r = symmetric_eigen_range(f);
  EXPECT_GE(r.min, 1e-3 - 1e-15);
  EXPECT_NEAR(r.max, symmetric_eigen_range(s).max, 1e-12);
}

TEST(Finite, RejectsNaN) {
  Matrix m = Matrix::Ones(2, 2);
  m(1, 1) = std::nan("");
  EXPECT_FALSE(all_finite(m));
  EXPECT_EQ(kind_of([&] { require_finite(m, "m"); }), ErrorKind::NonFinite);
}

TEST(Rng, DeterministicAndInRange) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng r(1);
  double mean = 0.0, sq = 0.0;
  const int N = 20000;
  for (int i = 0; i < N; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double z = r.normal();
    mean += z;
    sq += z * z;
    ASSERT_LT(r.below(7), 7u);
  }
  EXPECT_NEAR(mean / N, 0.0, 0.03);
  EXPECT_NEAR(sq / N, 1.0, 0.05);
  EXPECT_NE(mix_seed(1, 0), mix_seed(1, 1));
  EXPECT_EQ(mix_seed(7, 3), mix_seed(7, 3));
}
