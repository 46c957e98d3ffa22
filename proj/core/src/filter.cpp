#include "metaadapt/filter.hpp"

#include <cmath>

#include "metaadapt/errors.hpp"

namespace metaadapt {

FirstOrderFilter::FirstOrderFilter(double time_constant) : time_constant_(time_constant) {
  require(time_constant > 0.0, ErrorKind::BadParams, "filter time constant must be positive");
}

FirstOrderFilter::FirstOrderFilter(double time_constant, Eigen::Index rows, Eigen::Index cols)
    : FirstOrderFilter(time_constant) {
  state_ = Matrix::Zero(rows, cols);
  shaped_ = true;
}

const Matrix& FirstOrderFilter::update(const Matrix& u, double dt) {
  require(dt > 0.0, ErrorKind::BadParams, "filter step must be positive");
  if (!shaped_) {
    state_ = Matrix::Zero(u.rows(), u.cols());
    shaped_ = true;
  }
  require_same_shape(state_, u, "filter input");
  if (dt != cached_dt_) {
    cached_dt_ = dt;
    cached_decay_ = std::exp(-dt / time_constant_);
  }
  state_ = cached_decay_ * state_ + (1.0 - cached_decay_) * u;
  return state_;
}

}  // namespace metaadapt
