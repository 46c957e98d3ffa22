#pragma once

#include "metaadapt/linalg.hpp"

namespace metaadapt {

/// Stable first-order low-pass ẋ = (u − x)/T applied entrywise to a matrix
/// signal. The update is the exact zero-order-hold discretization, so the DC
/// gain is one for any step size.
class FirstOrderFilter {
 public:
  explicit FirstOrderFilter(double time_constant);
  FirstOrderFilter(double time_constant, Eigen::Index rows, Eigen::Index cols);

  /// x⁺ = x·e^{−dt/T} + u·(1 − e^{−dt/T}). The first call fixes the state
  /// shape unless it was given at construction.
  const Matrix& update(const Matrix& u, double dt);

  void reset() { state_.setZero(); }

  [[nodiscard]] const Matrix& state() const noexcept { return state_; }
  [[nodiscard]] double time_constant() const noexcept { return time_constant_; }
  [[nodiscard]] bool shaped() const noexcept { return shaped_; }

 private:
  double time_constant_;
  Matrix state_;
  bool shaped_ = false;
  double cached_dt_ = -1.0;
  double cached_decay_ = 0.0;
};

}  // namespace metaadapt
