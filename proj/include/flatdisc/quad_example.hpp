#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

#include "flatdisc/diffeo.hpp"
#include "flatdisc/systems.hpp"

namespace flatdisc::quad {

/// Singularity margin: feedback/chart determinants must exceed this.
inline constexpr double kGuardMargin = 1e-6;

/// |z4| below which the inverse-chart quadratic degenerates to its linear
/// limit and the closed-form root would lose precision.
inline constexpr double kBranchCutoff = 1e-8;

/// Determinant of the feedback matrix and of the chart Jacobian,
/// det = 1 + x3 - x4*y. Both constructions break down where it vanishes.
[[nodiscard]] inline double chart_determinant(double x3, double x4, double y) {
  return 1.0 + x3 - x4 * y;
}

// ---------------------------------------------------------------------------
// Plant, feedback, extension
// ---------------------------------------------------------------------------

/// Original 4-state, 2-input plant:
///   x1' = x2 + 2 x2 x3 + 2 x2 x4 u2
///   x2' = x3 + x4 u2
///   x3' = u1
///   x4' = (1 + x3) u2
/// valid where |1 + x3 - u2 x4| > kGuardMargin.
[[nodiscard]] inline ControlSystem original_system() {
  ControlSystem sys;
  sys.state_dim = 4;
  sys.input_dim = 2;
  sys.dynamics = [](const Vec& x, const Vec& u) {
    Vec dx(4);
    dx(0) = x(1) + 2.0 * x(1) * x(2) + 2.0 * x(1) * x(3) * u(1);
    dx(1) = x(2) + x(3) * u(1);
    dx(2) = u(0);
    dx(3) = (1.0 + x(2)) * u(1);
    return dx;
  };
  sys.domain_guard = [](const Vec& x, const Vec& u) {
    return std::abs(chart_determinant(x(2), x(3), u(1))) > kGuardMargin;
  };
  return sys;
}

/// Inverts the precompensator feedback matrix:
///   [[1, x4], [y, 1+x3]] * mu = (v1 - (1+x3) y^2, v2),
/// returning mu = (mu1, mu2). mu1 drives the original u1, mu2 drives the
/// compensator state y' = mu2. Solved by the explicit 2x2 inverse; the
/// determinant is 1 + x3 - x4*y.
[[nodiscard]] inline Vec feedback_psi(const Vec& x, double y, const Vec& v) {
  if (x.size() != 4 || v.size() != 2) {
    throw std::invalid_argument("feedback_psi: expected 4-state and 2-input vectors");
  }
  const double one_p_x3 = 1.0 + x(2);
  const double det = chart_determinant(x(2), x(3), y);
  if (!(std::abs(det) > kGuardMargin)) {
    throw SingularityError("feedback_psi: determinant 1+x3-x4*y = " + std::to_string(det) +
                           " within margin " + std::to_string(kGuardMargin));
  }
  const double rhs1 = v(0) - one_p_x3 * y * y;
  Vec mu(2);
  mu(0) = (one_p_x3 * rhs1 - x(3) * v(1)) / det;
  mu(1) = (v(1) - y * rhs1) / det;
  return mu;
}

/// Extended dynamics F(xi, v) on xi = (x1..x4, y):
///   ( x2 + 2 x2 (x3 + x4 y), x3 + x4 y, psi1, (1 + x3) y, psi2 )
/// with (psi1, psi2) = feedback_psi(x, y, v).
[[nodiscard]] inline Vec extended_dynamics(const Vec& xi, const Vec& v) {
  if (xi.size() != 5 || v.size() != 2) {
    throw std::invalid_argument("extended_dynamics: expected 5-state and 2-input vectors");
  }
  const double y = xi(4);
  const Vec psi = feedback_psi(xi.head(4), y, v);
  const double z3 = xi(2) + xi(3) * y;
  Vec f(5);
  f(0) = xi(1) + 2.0 * xi(1) * z3;
  f(1) = z3;
  f(2) = psi(0);
  f(3) = (1.0 + xi(2)) * y;
  f(4) = psi(1);
  return f;
}

/// Extended system wrapper: base dynamics F(xi, v), plant/compensator split
/// after coordinate 4, feedback recovering the original input u = (psi1, y).
[[nodiscard]] inline ExtendedSystem extended_system() {
  ExtendedSystem ext;
  ext.base.state_dim = 5;
  ext.base.input_dim = 2;
  ext.base.dynamics = [](const Vec& xi, const Vec& v) { return extended_dynamics(xi, v); };
  ext.base.domain_guard = [](const Vec& xi, const Vec&) {
    return std::abs(chart_determinant(xi(2), xi(3), xi(4))) > kGuardMargin;
  };
  ext.split_index = 4;
  ext.original_input_dim = 2;
  ext.feedback = [](const Vec& x, const Vec& y, const Vec& v) {
    const Vec psi = feedback_psi(x, y(0), v);
    Vec u(2);
    u(0) = psi(0);
    u(1) = y(0);
    return u;
  };
  return ext;
}

// ---------------------------------------------------------------------------
// Linearizing chart
// ---------------------------------------------------------------------------

/// Forward chart z = Phi(xi) = (x1 - x2^2, x2, x3 + x4 y, x4, (1 + x3) y).
[[nodiscard]] inline Vec phi(const Vec& xi) {
  if (xi.size() != 5) {
    throw std::invalid_argument("phi: expected a 5-vector");
  }
  Vec z(5);
  z(0) = xi(0) - xi(1) * xi(1);
  z(1) = xi(1);
  z(2) = xi(2) + xi(3) * xi(4);
  z(3) = xi(3);
  z(4) = (1.0 + xi(2)) * xi(4);
  return z;
}

/// Analytic Jacobian of the chart; det DPhi = 1 + x3 - x4*y.
[[nodiscard]] inline Mat phi_jacobian(const Vec& xi) {
  if (xi.size() != 5) {
    throw std::invalid_argument("phi_jacobian: expected a 5-vector");
  }
  Mat jac = Mat::Zero(5, 5);
  jac(0, 0) = 1.0;
  jac(0, 1) = -2.0 * xi(1);
  jac(1, 1) = 1.0;
  jac(2, 2) = 1.0;
  jac(2, 3) = xi(4);
  jac(2, 4) = xi(3);
  jac(3, 3) = 1.0;
  jac(4, 2) = xi(4);
  jac(4, 4) = 1.0 + xi(2);
  return jac;
}

/// Inverse chart. x1 = z1 + z2^2, x2 = z2, x4 = z4; y is the root of
///   z4 y^2 - (1+z3) y + z5 = 0
/// on the branch continuous with the z4 -> 0 limit y = z5/(1+z3), evaluated
/// in the cancellation-free form y = 2 z5 / ((1+z3) + sign(1+z3) sqrt(Delta))
/// with Delta = (1+z3)^2 - 4 z4 z5; finally x3 = z3 - z4 y.
///
/// Throws DomainError when Delta < 0 (the point has left the chart) and
/// SingularityError when |1+z3| <= kGuardMargin (branch undefined).
[[nodiscard]] inline Vec phi_inverse(const Vec& z) {
  if (z.size() != 5) {
    throw std::invalid_argument("phi_inverse: expected a 5-vector");
  }
  const double one_p_z3 = 1.0 + z(2);
  if (!(std::abs(one_p_z3) > kGuardMargin)) {
    throw SingularityError("phi_inverse: |1+z3| = " + std::to_string(std::abs(one_p_z3)) +
                           " within margin " + std::to_string(kGuardMargin) +
                           "; branch selection undefined");
  }
  const double disc = one_p_z3 * one_p_z3 - 4.0 * z(3) * z(4);
  if (disc < 0.0) {
    throw DomainError("phi_inverse: outside chart, discriminant (1+z3)^2-4*z4*z5 = " +
                      std::to_string(disc) + " < 0 at z=" + detail::to_string(z));
  }
  double y;
  if (std::abs(z(3)) >= kBranchCutoff) {
    const double sign = one_p_z3 >= 0.0 ? 1.0 : -1.0;
    y = 2.0 * z(4) / (one_p_z3 + sign * std::sqrt(disc));
  } else {
    y = z(4) / one_p_z3;  // series limit of the stable branch as z4 -> 0
  }
  Vec xi(5);
  xi(0) = z(0) + z(1) * z(1);
  xi(1) = z(1);
  xi(2) = z(2) - z(3) * y;
  xi(3) = z(3);
  xi(4) = y;
  return xi;
}

/// The chart as a Diffeomorphism, guarded by |det DPhi| > kGuardMargin.
[[nodiscard]] inline Diffeomorphism chart() {
  Diffeomorphism d;
  d.dim = 5;
  d.name = "quad-chart";
  d.forward = [](const Vec& xi) { return phi(xi); };
  d.inverse = [](const Vec& z) { return phi_inverse(z); };
  d.jacobian = [](const Vec& xi) { return phi_jacobian(xi); };
  d.domain_guard = [](const Vec& xi) {
    return std::abs(chart_determinant(xi(2), xi(3), xi(4))) > kGuardMargin;
  };
  return d;
}

// ---------------------------------------------------------------------------
// Bundle
// ---------------------------------------------------------------------------

/// The whole worked example: plant, extension, chart, linear normal form
/// (integrator chains of lengths 3 and 2), and flat-output bookkeeping.
/// The flat outputs are (z1, z4) = (x1 - x2^2, x4).
struct QuadExampleSystem {
  ControlSystem original;
  ExtendedSystem extended;
  Diffeomorphism phi;
  LinearSystem normal_form;
  std::array<int, 2> flat_output_indices{0, 3};  ///< zero-based positions of (z1, z4)
  double guard_margin = kGuardMargin;
};

[[nodiscard]] inline QuadExampleSystem make_system() {
  QuadExampleSystem sys;
  sys.original = original_system();
  sys.extended = extended_system();
  sys.phi = chart();
  sys.normal_form = brunovsky({3, 2});
  return sys;
}

// ---------------------------------------------------------------------------
// Demo tracking scenario
// ---------------------------------------------------------------------------

/// The closed-loop tracking demo: sinusoidal flat-output references, a
/// stabilizing error-feedback gain, stepsize 0.05 s over a 10 s horizon,
/// initial state (0.5, 0.2, 0.1, 0.2, 0), model reset every 20 cycles.
struct DemoScenario {
  std::function<double(double)> reference1;  ///< z1 target, 0.3 + 0.05 sin(0.4 pi t)
  std::function<double(double)> reference2;  ///< z4 target, 0.1 + 0.05 sin(0.2 pi t)
  Mat gain;                                  ///< 2x5 error feedback K
  double h = 0.05;
  double horizon = 10.0;
  int reset_period_cycles = 20;
  Vec initial_state;
};

[[nodiscard]] inline DemoScenario demo_scenario() {
  DemoScenario demo;
  const double pi = std::acos(-1.0);
  demo.reference1 = [pi](double t) { return 0.3 + 0.05 * std::sin(0.4 * pi * t); };
  demo.reference2 = [pi](double t) { return 0.1 + 0.05 * std::sin(0.2 * pi * t); };
  demo.gain = Mat::Zero(2, 5);
  demo.gain << -10.0, -10.0, -10.0, 0.0, 0.0,
                 0.0,   0.0,   0.0, -10.0, -10.0;
  demo.initial_state = (Vec(5) << 0.5, 0.2, 0.1, 0.2, 0.0).finished();
  return demo;
}

}  // namespace flatdisc::quad
