#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "flatdisc/scheme.hpp"
#include "flatdisc/systems.hpp"

namespace flatdisc {

// ---------------------------------------------------------------------------
// Flat-output references
// ---------------------------------------------------------------------------

/// Sampled flat-output reference pair phi1*, phi2* on a uniform grid.
///
/// Holds ceil(horizon/h) + 1 + 3 samples: one per cycle boundary plus a
/// 3-sample lookahead pad, because the nominal input needs the third
/// forward shift and would otherwise hit an end-of-horizon special case.
struct FlatReference {
  std::function<double(double)> ref1;
  std::function<double(double)> ref2;
  double h = 0.0;
  double horizon = 0.0;
  std::vector<std::array<double, 2>> samples;  ///< samples[k] = (phi1*(kh), phi2*(kh))

  /// Number of cycles within the horizon (last in-horizon index).
  [[nodiscard]] int steps() const { return static_cast<int>(samples.size()) - 4; }

  /// Samples the two reference functions over [0, horizon] plus the pad.
  [[nodiscard]] static FlatReference sample(std::function<double(double)> ref1,
                                            std::function<double(double)> ref2, double h,
                                            double horizon) {
    if (!ref1 || !ref2) {
      throw std::invalid_argument("FlatReference: missing reference function");
    }
    if (!(h > 0.0) || horizon < 0.0) {
      throw std::invalid_argument("FlatReference: need h > 0 and horizon >= 0");
    }
    FlatReference ref;
    ref.h = h;
    ref.horizon = horizon;
    // tolerance kills roundoff in horizon/h when the division is exact in reals
    const int cycles = static_cast<int>(std::ceil(horizon / h - 1e-9));
    ref.samples.reserve(static_cast<std::size_t>(cycles) + 4);
    for (int k = 0; k <= cycles + 3; ++k) {
      ref.samples.push_back({ref1(k * h), ref2(k * h)});
    }
    ref.ref1 = std::move(ref1);
    ref.ref2 = std::move(ref2);
    return ref;
  }
};

namespace detail {

inline void check_reference_index(const FlatReference& ref, int k, const char* who) {
  if (k < 0 || k > ref.steps()) {
    throw std::out_of_range(std::string(who) + ": index " + std::to_string(k) +
                            " outside [0, " + std::to_string(ref.steps()) + "]");
  }
}

}  // namespace detail

/// Nominal flat-model state z*[k] from forward differences of the samples:
///   z1* = phi1*[k]
///   z2* = (phi1*[k+1] - phi1*[k]) / h
///   z3* = (phi1*[k+2] - 2 phi1*[k+1] + phi1*[k]) / h^2
///   z4* = phi2*[k]
///   z5* = (phi2*[k+1] - phi2*[k]) / h
/// (the shift expressions forced by the explicit-Euler chain form).
[[nodiscard]] inline Vec flat_to_nominal_state(const FlatReference& ref, int k) {
  detail::check_reference_index(ref, k, "flat_to_nominal_state");
  const auto& s = ref.samples;
  const auto i = static_cast<std::size_t>(k);
  const double h = ref.h;
  Vec z(5);
  z(0) = s[i][0];
  z(1) = (s[i + 1][0] - s[i][0]) / h;
  z(2) = (s[i + 2][0] - 2.0 * s[i + 1][0] + s[i][0]) / (h * h);
  z(3) = s[i][1];
  z(4) = (s[i + 1][1] - s[i][1]) / h;
  return z;
}

/// Nominal input v*[k]: third forward difference of phi1* over h^3 and
/// second forward difference of phi2* over h^2.
[[nodiscard]] inline Vec nominal_input(const FlatReference& ref, int k) {
  detail::check_reference_index(ref, k, "nominal_input");
  const auto& s = ref.samples;
  const auto i = static_cast<std::size_t>(k);
  const double h = ref.h;
  Vec v(2);
  v(0) = (s[i + 3][0] - 3.0 * s[i + 2][0] + 3.0 * s[i + 1][0] - s[i][0]) / (h * h * h);
  v(1) = (s[i + 2][1] - 2.0 * s[i + 1][1] + s[i][1]) / (h * h);
  return v;
}

// ---------------------------------------------------------------------------
// Tracking law
// ---------------------------------------------------------------------------

/// Error-feedback tracking law v[k] = v*[k] + K (z[k] - z*[k]).
/// Stabilizes when the spectral radius of A_h + B_h K is below one.
struct TrackingLaw {
  Mat gain;  ///< K, input_dim x state_dim
  LinearDiscretization lind;
  FlatReference reference;
};

inline void validate(const TrackingLaw& law) {
  if (law.gain.rows() != law.lind.b_h.cols() || law.gain.cols() != law.lind.a_h.rows()) {
    throw std::invalid_argument("TrackingLaw: gain is " + std::to_string(law.gain.rows()) +
                                "x" + std::to_string(law.gain.cols()) + ", expected " +
                                std::to_string(law.lind.b_h.cols()) + "x" +
                                std::to_string(law.lind.a_h.rows()));
  }
  if (law.reference.samples.size() < 4) {
    throw std::invalid_argument("TrackingLaw: reference has no samples");
  }
}

/// One control evaluation: v[k] = v*[k] + K (z - z*[k]). Affine in z.
[[nodiscard]] inline Vec control_step(const TrackingLaw& law, const Vec& z, int k) {
  if (z.size() != law.gain.cols()) {
    throw std::invalid_argument("control_step: state has wrong dimension");
  }
  return nominal_input(law.reference, k) +
         law.gain * (z - flat_to_nominal_state(law.reference, k));
}

// ---------------------------------------------------------------------------
// Spectral checks
// ---------------------------------------------------------------------------

/// Eigenvalues of A_h + B_h K, sorted by real part, then imaginary part.
[[nodiscard]] inline std::vector<std::complex<double>> closed_loop_spectrum(const Mat& a_h,
                                                                            const Mat& b_h,
                                                                            const Mat& gain) {
  if (a_h.rows() != a_h.cols() || b_h.rows() != a_h.rows() || gain.rows() != b_h.cols() ||
      gain.cols() != a_h.cols()) {
    throw std::invalid_argument("closed_loop_spectrum: inconsistent dimensions");
  }
  const Mat closed = a_h + b_h * gain;
  Eigen::EigenSolver<Mat> solver(closed);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("closed_loop_spectrum: eigensolver failed to converge");
  }
  std::vector<std::complex<double>> eig(static_cast<std::size_t>(closed.rows()));
  for (Eigen::Index i = 0; i < closed.rows(); ++i) {
    eig[static_cast<std::size_t>(i)] = solver.eigenvalues()(i);
  }
  std::sort(eig.begin(), eig.end(), [](const auto& a, const auto& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return eig;
}

[[nodiscard]] inline double spectral_radius(const std::vector<std::complex<double>>& eig) {
  double radius = 0.0;
  for (const auto& lambda : eig) {
    radius = std::max(radius, std::abs(lambda));
  }
  return radius;
}

}  // namespace flatdisc
