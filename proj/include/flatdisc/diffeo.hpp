#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "flatdisc/errors.hpp"
#include "flatdisc/systems.hpp"

namespace flatdisc {

/// A point of the tangent bundle: base point and attached vector.
struct TangentVector {
  Vec base;
  Vec vector;
};

/// Diffeomorphism between open sets of R^dim: paired forward/inverse maps,
/// an optional analytic Jacobian (numeric fallback otherwise), and a guard
/// marking the chart where the pair is valid. Immutable; thread-safe.
struct Diffeomorphism {
  int dim = 0;
  std::string name;  ///< label used in map/scheme descriptions
  std::function<Vec(const Vec&)> forward;
  std::function<Vec(const Vec&)> inverse;
  std::function<Mat(const Vec&)> jacobian;      ///< empty = use numeric_jacobian
  std::function<bool(const Vec&)> domain_guard; ///< empty = everywhere valid

  [[nodiscard]] bool guarded(const Vec& x) const {
    return !domain_guard || domain_guard(x);
  }
};

/// Maximum condition number accepted for chart Jacobians before a solve is
/// refused as singular.
inline constexpr double kJacobianConditionLimit = 1e12;

/// Jacobian of phi at x by central finite differences with per-coordinate
/// step eta_i = 1e-6 * max(1, |x_i|). Available even when an analytic
/// Jacobian exists, so the two can be cross-checked.
[[nodiscard]] inline Mat numeric_jacobian(const Diffeomorphism& phi, const Vec& x) {
  if (!phi.forward) {
    throw std::invalid_argument("numeric_jacobian: diffeomorphism has no forward map");
  }
  if (x.size() != phi.dim) {
    throw std::invalid_argument("numeric_jacobian: point has length " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(phi.dim));
  }
  if (!phi.guarded(x)) {
    throw DomainError("numeric_jacobian: guard violated at x=" + detail::to_string(x));
  }
  Mat jac(phi.dim, phi.dim);
  Vec lo = x;
  Vec hi = x;
  for (int j = 0; j < phi.dim; ++j) {
    const double eta = 1e-6 * std::max(1.0, std::abs(x(j)));
    hi(j) = x(j) + eta;
    lo(j) = x(j) - eta;
    jac.col(j) = (phi.forward(hi) - phi.forward(lo)) / (2.0 * eta);
    hi(j) = x(j);
    lo(j) = x(j);
  }
  return jac;
}

/// Analytic Jacobian if the diffeomorphism carries one, numeric otherwise.
[[nodiscard]] inline Mat jacobian_at(const Diffeomorphism& phi, const Vec& x) {
  if (!phi.jacobian) {
    return numeric_jacobian(phi, x);
  }
  Mat jac = phi.jacobian(x);
  if (jac.rows() != phi.dim || jac.cols() != phi.dim) {
    throw std::invalid_argument("jacobian_at: analytic Jacobian has wrong shape");
  }
  return jac;
}

/// Tangent lift T(phi): (x, nu) -> (phi(x), Dphi(x) nu).
[[nodiscard]] inline TangentVector tangent_lift(const Diffeomorphism& phi,
                                                const TangentVector& tv) {
  if (tv.base.size() != phi.dim || tv.vector.size() != phi.dim) {
    throw std::invalid_argument("tangent_lift: tangent vector has wrong dimension");
  }
  if (!phi.guarded(tv.base)) {
    throw DomainError("tangent_lift: guard violated at x=" + detail::to_string(tv.base));
  }
  return TangentVector{phi.forward(tv.base), jacobian_at(phi, tv.base) * tv.vector};
}

/// Inverse tangent lift T(phi)^-1: (z, rho) -> (phi^-1(z), Dphi(phi^-1(z))^-1 rho).
/// The Jacobian inverse is applied by linear solve (never formed); a
/// condition estimate above kJacobianConditionLimit is refused.
[[nodiscard]] inline TangentVector tangent_lift_inverse(const Diffeomorphism& phi,
                                                        const TangentVector& tv) {
  if (tv.base.size() != phi.dim || tv.vector.size() != phi.dim) {
    throw std::invalid_argument("tangent_lift_inverse: tangent vector has wrong dimension");
  }
  if (!phi.inverse) {
    throw std::invalid_argument("tangent_lift_inverse: diffeomorphism has no inverse map");
  }
  const Vec x = phi.inverse(tv.base);
  if (!phi.guarded(x)) {
    throw DomainError("tangent_lift_inverse: guard violated at phi^-1(z)=" +
                      detail::to_string(x));
  }
  const Mat jac = jacobian_at(phi, x);
  Eigen::JacobiSVD<Mat> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues()(0);
  const double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (!(smin > 0.0) || smax / smin > kJacobianConditionLimit) {
    const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    throw SingularityError("tangent_lift_inverse: Jacobian condition estimate " +
                           std::to_string(cond) + " exceeds " +
                           std::to_string(kJacobianConditionLimit) + " at x=" +
                           detail::to_string(x));
  }
  return TangentVector{x, svd.solve(tv.vector)};
}

// ---------------------------------------------------------------------------
// Stock diffeomorphisms
// ---------------------------------------------------------------------------

/// Identity chart on R^dim.
[[nodiscard]] inline Diffeomorphism identity_diffeo(int dim) {
  if (dim <= 0) {
    throw std::invalid_argument("identity_diffeo: dimension must be positive");
  }
  Diffeomorphism phi;
  phi.dim = dim;
  phi.name = "identity";
  phi.forward = [](const Vec& x) { return x; };
  phi.inverse = [](const Vec& z) { return z; };
  phi.jacobian = [dim](const Vec&) { return Mat::Identity(dim, dim); };
  return phi;
}

/// Linear chart x -> M x for invertible M.
[[nodiscard]] inline Diffeomorphism linear_diffeo(const Mat& m) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw std::invalid_argument("linear_diffeo: matrix must be square and nonempty");
  }
  Eigen::FullPivLU<Mat> lu(m);
  if (!lu.isInvertible()) {
    throw std::invalid_argument("linear_diffeo: matrix is singular");
  }
  const Mat minv = lu.inverse();
  Diffeomorphism phi;
  phi.dim = static_cast<int>(m.rows());
  phi.name = "linear";
  phi.forward = [m](const Vec& x) { return Vec(m * x); };
  phi.inverse = [minv](const Vec& z) { return Vec(minv * z); };
  phi.jacobian = [m](const Vec&) { return m; };
  return phi;
}

/// Composition outer after inner (x -> outer(inner(x))). The analytic
/// Jacobian chains only when both factors carry one; otherwise the numeric
/// fallback applies to the composite.
[[nodiscard]] inline Diffeomorphism compose(const Diffeomorphism& outer,
                                            const Diffeomorphism& inner) {
  if (outer.dim != inner.dim) {
    throw std::invalid_argument("compose: dimension mismatch");
  }
  Diffeomorphism phi;
  phi.dim = inner.dim;
  phi.name = outer.name + "*" + inner.name;
  phi.forward = [o = outer.forward, i = inner.forward](const Vec& x) { return o(i(x)); };
  phi.inverse = [o = outer.inverse, i = inner.inverse](const Vec& z) { return i(o(z)); };
  if (outer.jacobian && inner.jacobian) {
    phi.jacobian = [oj = outer.jacobian, ij = inner.jacobian,
                    ifwd = inner.forward](const Vec& x) { return Mat(oj(ifwd(x)) * ij(x)); };
  }
  if (outer.domain_guard || inner.domain_guard) {
    phi.domain_guard = [og = outer.domain_guard, ig = inner.domain_guard,
                        ifwd = inner.forward](const Vec& x) {
      if (ig && !ig(x)) return false;
      if (og && !og(ifwd(x))) return false;
      return true;
    };
  }
  return phi;
}

}  // namespace flatdisc
