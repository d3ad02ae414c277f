#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "flatdisc/discretization_map.hpp"
#include "flatdisc/rk4.hpp"
#include "flatdisc/systems.hpp"

namespace flatdisc {

// ---------------------------------------------------------------------------
// Scheme types
// ---------------------------------------------------------------------------

/// Newton settings for the implicit stepper (no damping).
struct NewtonConfig {
  int max_iter = 50;
  double tol = 1e-12;     ///< residual infinity-norm at convergence
  double fd_step = 1e-7;  ///< relative step of the finite-difference Jacobian
};

enum class SchemeProvenance { generic_implicit, lifted_closed_form, linear };

/// One-step discretization xi+ = F_h(xi, v).
///
/// `step` is pure in (xi, v, h) and accepts any h >= 0 (h = 0 returns xi up
/// to solver tolerance); `nominal_h` records the stepsize the scheme was
/// built around, which closed-form schemes reuse without refactorization.
struct DiscreteScheme {
  int state_dim = 0;
  int input_dim = 0;
  std::function<Vec(const Vec& xi, const Vec& v, double h)> step;
  int order_claimed = 1;
  SchemeProvenance provenance = SchemeProvenance::generic_implicit;
  NewtonConfig newton;    ///< meaningful for generic_implicit provenance
  double nominal_h = 0.0;
};

/// Discrete linear pair z+ = A_h z + B_h v, together with enough context
/// (continuous pair, alpha, nominal h) to re-evaluate A_h, B_h at another
/// stepsize — order studies step the same scheme at several h.
struct LinearDiscretization {
  Mat a_h;
  Mat b_h;
  std::optional<double> source_alpha;  ///< alpha of the generating map, if any
  Mat a;          ///< continuous A (empty if unknown)
  Mat b;          ///< continuous B (empty if unknown)
  double h = 0.0; ///< stepsize matching a_h, b_h

  /// (A_h, B_h) at an arbitrary stepsize; the stored pair when h_eval == h.
  [[nodiscard]] std::pair<Mat, Mat> at(double h_eval) const;
};

namespace detail {

/// Closed form of the alpha-family linear discretization:
/// A_h = (I - alpha h A)^-1 (I + (1-alpha) h A), B_h = (I - alpha h A)^-1 h B.
/// alpha = 0 short-circuits to the explicit pair I + hA, hB (entrywise exact).
inline std::pair<Mat, Mat> alpha_discretize(double alpha, const Mat& a, const Mat& b, double h) {
  if (alpha == 0.0) {
    return {Mat(Mat::Identity(a.rows(), a.cols()) + h * a), Mat(h * b)};
  }
  const Mat lhs = Mat::Identity(a.rows(), a.cols()) - (alpha * h) * a;
  Eigen::PartialPivLU<Mat> lu(lhs);
  if (lu.rcond() < 1e-14) {
    throw StepsizeError("discretize_linear: I - alpha*h*A is singular at h = " +
                        std::to_string(h) + "; try a smaller stepsize");
  }
  return {Mat(lu.solve(Mat::Identity(a.rows(), a.cols()) + ((1.0 - alpha) * h) * a)),
          Mat(lu.solve(h * b))};
}

}  // namespace detail

inline std::pair<Mat, Mat> LinearDiscretization::at(double h_eval) const {
  if (h_eval == h) {
    return {a_h, b_h};
  }
  if (!source_alpha || a.size() == 0) {
    throw std::invalid_argument(
        "LinearDiscretization: cannot re-evaluate at a different stepsize without the "
        "continuous pair and source alpha");
  }
  return detail::alpha_discretize(*source_alpha, a, b, h_eval);
}

// ---------------------------------------------------------------------------
// Linear discretization (closed form)
// ---------------------------------------------------------------------------

/// Discretizes the continuous pair (A, B) through an alpha-family map at
/// stepsize h. Satisfies the implicit relations
///   A_h = I + hA((1-alpha) I + alpha A_h),  B_h = alpha h A B_h + h B
/// to roundoff; alpha = 0 gives exactly I + hA, hB.
[[nodiscard]] inline LinearDiscretization discretize_linear(const DiscretizationMap& map,
                                                            const LinearSystem& lin, double h) {
  if (map.kind.family != MapKind::Family::alpha) {
    throw std::invalid_argument(
        "discretize_linear: requires an alpha-family map (got: " + map.kind.description + ")");
  }
  if (lin.discrete) {
    throw std::invalid_argument("discretize_linear: system is already discrete");
  }
  if (!(h > 0.0)) {
    throw std::invalid_argument("discretize_linear: stepsize must be positive");
  }
  const Eigen::Index n = lin.a.rows();
  if (lin.a.cols() != n || lin.b.rows() != n) {
    throw std::invalid_argument("discretize_linear: inconsistent matrix dimensions");
  }
  if (map.dim != static_cast<int>(n)) {
    throw std::invalid_argument("discretize_linear: map dim does not match system dim");
  }
  LinearDiscretization lind;
  lind.source_alpha = map.kind.alpha;
  lind.a = lin.a;
  lind.b = lin.b;
  lind.h = h;
  std::tie(lind.a_h, lind.b_h) = detail::alpha_discretize(map.kind.alpha, lin.a, lin.b, h);
  return lind;
}

/// Wraps a linear discretization as a DiscreteScheme stepping
/// z+ = A_h z + B_h v (re-evaluated when called at a different h).
[[nodiscard]] inline DiscreteScheme linear_scheme(const LinearDiscretization& lind) {
  DiscreteScheme scheme;
  scheme.state_dim = static_cast<int>(lind.a_h.rows());
  scheme.input_dim = static_cast<int>(lind.b_h.cols());
  scheme.provenance = SchemeProvenance::linear;
  scheme.nominal_h = lind.h;
  scheme.step = [lind](const Vec& z, const Vec& v, double h) {
    if (z.size() != lind.a_h.rows() || v.size() != lind.b_h.cols()) {
      throw std::invalid_argument("linear_scheme: dimension mismatch");
    }
    if (h == 0.0) {
      return z;
    }
    auto [a_h, b_h] = lind.at(h);
    return Vec(a_h * z + b_h * v);
  };
  return scheme;
}

// ---------------------------------------------------------------------------
// Generic implicit stepper
// ---------------------------------------------------------------------------

/// Builds the one-step scheme defined implicitly by
///   D^-1(xi, xi+) = (tau, nu)  with  nu = h F(tau, v),
/// solved for xi+ by Newton iteration with a finite-difference Jacobian and
/// explicit-Euler initial guess xi + h F(xi, v). The residual is
///   R(xi+) = nu(xi, xi+) - h F(tau(xi, xi+), v).
/// Through an alpha map this reproduces the alpha one-step family (explicit
/// Euler at 0, implicit Euler at 1); through a lifted map it reproduces the
/// transported scheme.
[[nodiscard]] inline DiscreteScheme build_generic_stepper(const DiscretizationMap& map,
                                                          const ExtendedSystem& sys, double h,
                                                          const NewtonConfig& newton = {}) {
  validate(sys);
  if (map.dim != sys.base.state_dim) {
    throw std::invalid_argument("build_generic_stepper: map dim " + std::to_string(map.dim) +
                                " != system dim " + std::to_string(sys.base.state_dim));
  }
  if (!(h > 0.0)) {
    throw std::invalid_argument("build_generic_stepper: nominal stepsize must be positive");
  }
  if (newton.max_iter < 1 || !(newton.tol > 0.0) || !(newton.fd_step > 0.0)) {
    throw std::invalid_argument("build_generic_stepper: invalid Newton configuration");
  }
  DiscreteScheme scheme;
  scheme.state_dim = sys.base.state_dim;
  scheme.input_dim = sys.base.input_dim;
  scheme.provenance = SchemeProvenance::generic_implicit;
  scheme.newton = newton;
  scheme.nominal_h = h;
  scheme.step = [map, base = sys.base, newton](const Vec& xi, const Vec& v, double h_step) {
    if (h_step < 0.0) {
      throw std::invalid_argument("step: negative stepsize");
    }
    const auto residual = [&](const Vec& cand) {
      const TangentVector tv = map.inverse(xi, cand);
      return Vec(tv.vector - h_step * eval_dynamics(base, tv.base, v));
    };
    Vec cand = xi + h_step * eval_dynamics(base, xi, v);
    Vec res = residual(cand);
    const int n = static_cast<int>(xi.size());
    Mat jac(n, n);
    // loop guard written so a NaN residual iterates (and eventually throws)
    // instead of being mistaken for convergence
    for (int iter = 0; !(res.lpNorm<Eigen::Infinity>() < newton.tol); ++iter) {
      if (iter >= newton.max_iter) {
        throw ConvergenceError("step: Newton failed to converge after " +
                                   std::to_string(newton.max_iter) +
                                   " iterations, residual inf-norm = " +
                                   std::to_string(res.lpNorm<Eigen::Infinity>()),
                               res.lpNorm<Eigen::Infinity>());
      }
      Vec probe = cand;
      for (int j = 0; j < n; ++j) {
        const double dj = newton.fd_step * std::max(1.0, std::abs(cand(j)));
        probe(j) = cand(j) + dj;
        jac.col(j) = (residual(probe) - res) / dj;
        probe(j) = cand(j);
      }
      Eigen::PartialPivLU<Mat> lu(jac);
      if (!(lu.rcond() >= 1e-15)) {
        throw ConvergenceError("step: Newton Jacobian is numerically singular",
                               res.lpNorm<Eigen::Infinity>());
      }
      cand += lu.solve(-res);
      res = residual(cand);
    }
    return cand;
  };
  return scheme;
}

// ---------------------------------------------------------------------------
// Lifted closed-form stepper
// ---------------------------------------------------------------------------

/// Closed-form transported stepper xi+ = phi^-1(A_h phi(xi) + B_h v).
/// No iteration; equals the generic implicit stepper through the lifted map
/// (the commuting-diagram equivalence, asserted by tests). When called at a
/// stepsize other than lind.h, the linear pair is re-evaluated.
[[nodiscard]] inline DiscreteScheme build_lifted_stepper(const Diffeomorphism& phi,
                                                         const LinearDiscretization& lind) {
  if (phi.dim != lind.a_h.rows()) {
    throw std::invalid_argument("build_lifted_stepper: chart dim " + std::to_string(phi.dim) +
                                " != linear dim " + std::to_string(lind.a_h.rows()));
  }
  if (!phi.forward || !phi.inverse) {
    throw std::invalid_argument("build_lifted_stepper: chart must provide forward and inverse");
  }
  DiscreteScheme scheme;
  scheme.state_dim = phi.dim;
  scheme.input_dim = static_cast<int>(lind.b_h.cols());
  scheme.provenance = SchemeProvenance::lifted_closed_form;
  scheme.nominal_h = lind.h;
  scheme.step = [phi, lind](const Vec& xi, const Vec& v, double h_step) {
    if (xi.size() != phi.dim || v.size() != lind.b_h.cols()) {
      throw std::invalid_argument("step: dimension mismatch");
    }
    if (!phi.guarded(xi)) {
      throw DomainError("step: chart guard violated at xi=" + detail::to_string(xi));
    }
    auto [a_h, b_h] = lind.at(h_step);
    return phi.inverse(Vec(a_h * phi.forward(xi) + b_h * v));
  };
  return scheme;
}

// ---------------------------------------------------------------------------
// Convergence-order measurement
// ---------------------------------------------------------------------------

/// Reference one-step integrator: (xi, v, h) -> xi(h) under held v.
using OneStepIntegrator = std::function<Vec(const Vec& xi, const Vec& v, double h)>;

/// Classical fourth-order reference with fixed substeps (deterministic).
[[nodiscard]] inline OneStepIntegrator rk4_oracle(const ControlSystem& sys, int substeps = 100) {
  if (substeps < 1) {
    throw std::invalid_argument("rk4_oracle: substeps must be >= 1");
  }
  return [sys, substeps](const Vec& xi, const Vec& v, double h) {
    return rk4_integrate(sys, xi, v, h, substeps);
  };
}

struct OrderSample {
  double h = 0.0;
  double error = 0.0;  ///< |oracle - scheme| / h (normalized local error)
};

/// Result of an order study. `slope` is the least-squares slope of
/// log(error) vs log(h); an observed slope near the scheme's order r means
/// the normalized local error behaves like K h^r. When every error is
/// below 1e-12 the scheme matches the oracle to roundoff and the slope is
/// meaningless; `exact` flags that case.
struct OrderStudy {
  std::vector<OrderSample> samples;
  double slope = std::numeric_limits<double>::quiet_NaN();
  bool exact = false;
};

/// Threshold below which errors are considered pure roundoff.
inline constexpr double kOrderExactThreshold = 1e-12;

/// Measures the normalized local error e(h) = |oracle(xi,v,h) -
/// scheme.step(xi,v,h)|_2 / h of one step under zero-order-held input, for
/// each h in h_list, and fits the order as the log-log slope. Pass an empty
/// oracle to use the fourth-order reference on sys with 100 substeps.
[[nodiscard]] inline OrderStudy measure_order(const DiscreteScheme& scheme,
                                              const ExtendedSystem& sys,
                                              OneStepIntegrator oracle, const Vec& xi,
                                              const Vec& v, const std::vector<double>& h_list) {
  validate(sys);
  if (h_list.size() < 3) {
    throw std::invalid_argument("measure_order: need at least 3 stepsizes");
  }
  for (double h : h_list) {
    if (!(h > 0.0)) {
      throw std::invalid_argument("measure_order: stepsizes must be positive");
    }
  }
  if (xi.size() != scheme.state_dim || v.size() != scheme.input_dim) {
    throw std::invalid_argument("measure_order: point has wrong dimensions");
  }
  if (!oracle) {
    oracle = rk4_oracle(sys.base);
  }
  OrderStudy study;
  study.samples.reserve(h_list.size());
  bool all_tiny = true;
  for (double h : h_list) {
    const Vec reference = oracle(xi, v, h);
    const Vec stepped = scheme.step(xi, v, h);
    const double err = (reference - stepped).norm() / h;
    all_tiny = all_tiny && err < kOrderExactThreshold;
    study.samples.push_back(OrderSample{h, err});
  }
  study.exact = all_tiny;
  if (!study.exact) {
    // least-squares slope of log e against log h
    const auto n = static_cast<double>(study.samples.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const OrderSample& s : study.samples) {
      const double lx = std::log(s.h);
      const double ly = std::log(std::max(s.error, 1e-300));
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
    }
    study.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return study;
}

}  // namespace flatdisc
