#pragma once

#include <utility>

#include "metaadapt/errors.hpp"
#include "metaadapt/linalg.hpp"

namespace metaadapt {

/// One classical fourth-order Runge-Kutta step of ẋ = f(x, u) with the
/// input u held over the step. Throws NonFinite if the result leaves the
/// finite range.
template <class Field, class Input>
[[nodiscard]] Vector integrate_step(Field&& f, const Vector& x, const Input& u, double dt) {
  if (!(dt > 0.0)) fail(ErrorKind::BadParams, "integrate_step: dt must be positive");
  const Vector k1 = f(x, u);
  const Vector k2 = f(Vector(x + 0.5 * dt * k1), u);
  const Vector k3 = f(Vector(x + 0.5 * dt * k2), u);
  const Vector k4 = f(Vector(x + dt * k3), u);
  Vector next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  if (!next.allFinite()) fail(ErrorKind::NonFinite, "integrate_step: state left the finite range");
  return next;
}

/// Input-free overload.
template <class Field>
[[nodiscard]] Vector integrate_step(Field&& f, const Vector& x, double dt) {
  struct None {};
  return integrate_step([&f](const Vector& y, None) { return f(y); }, x, None{}, dt);
}

}  // namespace metaadapt
