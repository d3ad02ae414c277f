#pragma once

#include <algorithm>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "flatdisc/diffeo.hpp"
#include "flatdisc/systems.hpp"

namespace flatdisc {

/// Ordered pair of points returned by a discretization map.
struct PointPair {
  Vec first;   ///< D1(x, nu)
  Vec second;  ///< D2(x, nu)
};

/// Provenance tag of a discretization map.
struct MapKind {
  enum class Family { alpha, lifted, custom };
  Family family = Family::custom;
  double alpha = 0.0;       ///< meaningful only for Family::alpha
  std::string description;  ///< e.g. "alpha(0.5)" or "lifted(alpha(0), chart)"
};

/// Discretization map D(x, nu) = (D1, D2) with its inverse.
///
/// By construction every shipped map satisfies the two defining axioms:
/// D(x, 0) = (x, x), and [D2(x, eps*nu) - D1(x, eps*nu)]/eps -> nu as
/// eps -> 0. The inverse is mandatory: the implicit stepper recursion
/// consumes it. inverse(a, b) returns the tangent vector (base, nu) with
/// D(base, nu) = (a, b).
struct DiscretizationMap {
  int dim = 0;
  std::function<PointPair(const Vec& x, const Vec& nu)> forward;
  std::function<TangentVector(const Vec& a, const Vec& b)> inverse;
  MapKind kind;
};

// ---------------------------------------------------------------------------
// The alpha family
// ---------------------------------------------------------------------------

/// The one-parameter family D(x, nu) = (x - alpha*nu, x + (1-alpha)*nu).
///
/// Inverse convention: for a pair (a, b), nu = b - a and base = a + alpha*nu
/// = (1-alpha)a + alpha*b. Steppers built on this convention reproduce
/// explicit Euler at alpha = 0 and implicit Euler at alpha = 1.
[[nodiscard]] inline DiscretizationMap alpha_map(double alpha, int dim) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw std::invalid_argument("alpha_map: alpha must lie in [0, 1], got " +
                                std::to_string(alpha));
  }
  if (dim <= 0) {
    throw std::invalid_argument("alpha_map: dimension must be positive");
  }
  DiscretizationMap map;
  map.dim = dim;
  map.kind.family = MapKind::Family::alpha;
  map.kind.alpha = alpha;
  map.kind.description = "alpha(" + std::to_string(alpha) + ")";
  map.forward = [alpha, dim](const Vec& x, const Vec& nu) {
    if (x.size() != dim || nu.size() != dim) {
      throw std::invalid_argument("alpha_map: dimension mismatch");
    }
    return PointPair{x - alpha * nu, x + (1.0 - alpha) * nu};
  };
  map.inverse = [alpha, dim](const Vec& a, const Vec& b) {
    if (a.size() != dim || b.size() != dim) {
      throw std::invalid_argument("alpha_map: dimension mismatch");
    }
    Vec nu = b - a;
    return TangentVector{a + alpha * nu, std::move(nu)};
  };
  return map;
}

// ---------------------------------------------------------------------------
// Lifting a map through a diffeomorphism
// ---------------------------------------------------------------------------

/// Transports `inner` through the chart phi:
///   D = (phi^-1 x phi^-1) o inner o T(phi),
///   D^-1 = T(phi)^-1 o inner^-1 o (phi x phi).
/// The lifted map inherits the defining axioms from `inner`.
[[nodiscard]] inline DiscretizationMap lift_map(const DiscretizationMap& inner,
                                                const Diffeomorphism& phi) {
  if (inner.dim != phi.dim) {
    throw std::invalid_argument("lift_map: map dim " + std::to_string(inner.dim) +
                                " != chart dim " + std::to_string(phi.dim));
  }
  if (!inner.forward || !inner.inverse) {
    throw std::invalid_argument("lift_map: inner map must provide forward and inverse");
  }
  if (!phi.forward || !phi.inverse) {
    throw std::invalid_argument("lift_map: chart must provide forward and inverse");
  }
  DiscretizationMap map;
  map.dim = inner.dim;
  map.kind.family = MapKind::Family::lifted;
  map.kind.description =
      "lifted(" + inner.kind.description + ", " + (phi.name.empty() ? "chart" : phi.name) + ")";
  map.forward = [inner, phi](const Vec& x, const Vec& nu) {
    const TangentVector up = tangent_lift(phi, TangentVector{x, nu});
    PointPair pair = inner.forward(up.base, up.vector);
    return PointPair{phi.inverse(pair.first), phi.inverse(pair.second)};
  };
  map.inverse = [inner, phi](const Vec& a, const Vec& b) {
    if (!phi.guarded(a) || !phi.guarded(b)) {
      throw DomainError("lift_map: guard violated at an endpoint of the pair");
    }
    const TangentVector down = inner.inverse(phi.forward(a), phi.forward(b));
    return tangent_lift_inverse(phi, down);
  };
  return map;
}

// ---------------------------------------------------------------------------
// Axiom checking
// ---------------------------------------------------------------------------

/// Tolerances and probe size for check_axioms.
struct AxiomCheckConfig {
  double identity_tol = 1e-12;  ///< |D(x,0) - (x,x)| (zero for algebraic families)
  double tangency_tol = 1e-4;   ///< finite-difference tangency defect
  double roundtrip_tol = 1e-9;  ///< |inverse(forward(x,nu)) - (x,nu)|
  double tangency_eps = 1e-5;   ///< probe scale for the tangency quotient
};

/// Worst-case defects of the map axioms over a sample set.
struct AxiomReport {
  int samples_tested = 0;
  double max_identity_defect = 0.0;
  double max_tangency_defect = 0.0;
  double max_roundtrip_defect = 0.0;
  bool pass = false;  ///< all defects within the configured tolerances
};

/// Evaluates the three defining properties at every sample (x, nu):
///  - identity:   D(x, 0) = (x, x)
///  - tangency:   [D2(x, eps*nu) - D1(x, eps*nu)]/eps = nu + O(eps)
///  - round trip: inverse(forward(x, nu)) = (x, nu)
/// Samples must lie in the guard region (tube of |nu| <= 0.1 recommended);
/// failures are reported, never thrown. Deterministic for fixed samples.
[[nodiscard]] inline AxiomReport check_axioms(const DiscretizationMap& map,
                                              const std::vector<TangentVector>& samples,
                                              const AxiomCheckConfig& cfg = {}) {
  if (!map.forward || !map.inverse) {
    throw std::invalid_argument("check_axioms: map must provide forward and inverse");
  }
  if (samples.empty()) {
    throw std::invalid_argument("check_axioms: empty sample list");
  }
  if (!(cfg.tangency_eps > 0.0)) {
    throw std::invalid_argument("check_axioms: tangency_eps must be positive");
  }
  AxiomReport report;
  const Vec zero = Vec::Zero(map.dim);
  for (const TangentVector& s : samples) {
    if (s.base.size() != map.dim || s.vector.size() != map.dim) {
      throw std::invalid_argument("check_axioms: sample has wrong dimension");
    }
    const PointPair at_zero = map.forward(s.base, zero);
    const double identity_defect =
        std::max((at_zero.first - s.base).lpNorm<Eigen::Infinity>(),
                 (at_zero.second - s.base).lpNorm<Eigen::Infinity>());

    const PointPair probe = map.forward(s.base, cfg.tangency_eps * s.vector);
    const double tangency_defect =
        ((probe.second - probe.first) / cfg.tangency_eps - s.vector).lpNorm<Eigen::Infinity>();

    const PointPair pair = map.forward(s.base, s.vector);
    const TangentVector back = map.inverse(pair.first, pair.second);
    const double roundtrip_defect =
        std::max((back.base - s.base).lpNorm<Eigen::Infinity>(),
                 (back.vector - s.vector).lpNorm<Eigen::Infinity>());

    report.max_identity_defect = std::max(report.max_identity_defect, identity_defect);
    report.max_tangency_defect = std::max(report.max_tangency_defect, tangency_defect);
    report.max_roundtrip_defect = std::max(report.max_roundtrip_defect, roundtrip_defect);
    ++report.samples_tested;
  }
  report.pass = report.max_identity_defect <= cfg.identity_tol &&
                report.max_tangency_defect <= cfg.tangency_tol &&
                report.max_roundtrip_defect <= cfg.roundtrip_tol;
  return report;
}

}  // namespace flatdisc
