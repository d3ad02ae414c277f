#pragma once

#include <stdexcept>
#include <string>

#include "flatdisc/systems.hpp"

namespace flatdisc {

/// Integrates xdot = f(x, u_held) over [0, h] with `substeps` equal steps of
/// the classical fourth-order Runge-Kutta method, input held constant.
///
/// Fixed substeps (no adaptivity) keep results bit-reproducible; at the
/// stepsizes used here the integration error is far below every scheme
/// error being measured against it. The domain guard is checked at substep
/// boundaries (including the final state); a violation reports the time
/// offset at which it occurred.
[[nodiscard]] inline Vec rk4_integrate(const ControlSystem& sys, Vec x, const Vec& u_held,
                                       double h, int substeps) {
  if (substeps < 1) {
    throw std::invalid_argument("rk4_integrate: substeps must be >= 1");
  }
  if (h < 0.0) {
    throw std::invalid_argument("rk4_integrate: negative step length");
  }
  if (x.size() != sys.state_dim || u_held.size() != sys.input_dim) {
    throw std::invalid_argument("rk4_integrate: dimension mismatch");
  }
  const double dt = h / substeps;
  for (int s = 0; s < substeps; ++s) {
    if (sys.domain_guard && !sys.domain_guard(x, u_held)) {
      throw DomainError("rk4_integrate: domain guard violated at t+" +
                        std::to_string(s * dt) + " (substep " + std::to_string(s) + "), x=" +
                        detail::to_string(x));
    }
    const Vec k1 = sys.dynamics(x, u_held);
    const Vec k2 = sys.dynamics(x + (0.5 * dt) * k1, u_held);
    const Vec k3 = sys.dynamics(x + (0.5 * dt) * k2, u_held);
    const Vec k4 = sys.dynamics(x + dt * k3, u_held);
    x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  if (sys.domain_guard && !sys.domain_guard(x, u_held)) {
    throw DomainError("rk4_integrate: domain guard violated at t+" + std::to_string(h) +
                      " (end of step), x=" + detail::to_string(x));
  }
  return x;
}

}  // namespace flatdisc
