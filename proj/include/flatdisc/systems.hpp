#pragma once

#include <functional>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "flatdisc/errors.hpp"

namespace flatdisc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

namespace detail {

/// "(0.5, 0.2, ...)" rendering for error messages.
inline std::string to_string(const Vec& v) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    os << (i ? ", " : "") << v(i);
  }
  os << ")";
  return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Continuous-time systems
// ---------------------------------------------------------------------------

/// Continuous-time control system  xdot = f(x, u)  with a validity guard.
///
/// The guard marks the region where the model (and every construction built
/// on top of it) is trusted; an empty guard means "valid everywhere".
/// Immutable after construction; safe to share across threads.
struct ControlSystem {
  int state_dim = 0;
  int input_dim = 0;
  std::function<Vec(const Vec& x, const Vec& u)> dynamics;
  std::function<bool(const Vec& x, const Vec& u)> domain_guard;  ///< empty = always valid
};

/// Evaluates f(x, u) after dimension and guard checks. Pure: equal inputs
/// give bit-identical outputs.
[[nodiscard]] inline Vec eval_dynamics(const ControlSystem& sys, const Vec& x, const Vec& u) {
  if (!sys.dynamics) {
    throw std::invalid_argument("eval_dynamics: system has no dynamics callable");
  }
  if (x.size() != sys.state_dim || u.size() != sys.input_dim) {
    throw std::invalid_argument(
        "eval_dynamics: dimension mismatch, expected state " + std::to_string(sys.state_dim) +
        " / input " + std::to_string(sys.input_dim) + ", got " + std::to_string(x.size()) +
        " / " + std::to_string(u.size()));
  }
  if (sys.domain_guard && !sys.domain_guard(x, u)) {
    throw DomainError("eval_dynamics: domain guard violated at x=" + detail::to_string(x) +
                      ", u=" + detail::to_string(u));
  }
  Vec dx = sys.dynamics(x, u);
  if (dx.size() != sys.state_dim) {
    throw std::invalid_argument("eval_dynamics: dynamics returned length " +
                                std::to_string(dx.size()) + ", expected " +
                                std::to_string(sys.state_dim));
  }
  return dx;
}

/// Precompensated (dynamically extended) system.
///
/// The base system evolves the extended state xi = (x, y) under the new
/// input v; `feedback` recovers the original plant input u from (x, y, v).
/// The first `split_index` coordinates of xi are the plant state x, the
/// rest is the compensator state y.
struct ExtendedSystem {
  ControlSystem base;          ///< dynamics F(xi, v) on the extended state
  int split_index = 0;         ///< xi.head(split_index) = x, xi.tail(rest) = y
  int original_input_dim = 0;  ///< length of the recovered u
  std::function<Vec(const Vec& x, const Vec& y, const Vec& v)> feedback;
};

/// Throws invalid_argument unless the split/feedback bookkeeping is coherent.
inline void validate(const ExtendedSystem& sys) {
  if (sys.split_index <= 0 || sys.split_index > sys.base.state_dim) {
    throw std::invalid_argument("ExtendedSystem: split_index " + std::to_string(sys.split_index) +
                                " outside (0, " + std::to_string(sys.base.state_dim) + "]");
  }
  if (sys.original_input_dim < 0) {
    throw std::invalid_argument("ExtendedSystem: negative original input dimension");
  }
}

/// Wraps a plain system as a trivial extension (no compensator state,
/// feedback = identity on v). Lets un-extended systems run through
/// machinery that expects an ExtendedSystem.
[[nodiscard]] inline ExtendedSystem as_extended(const ControlSystem& sys) {
  ExtendedSystem ext;
  ext.base = sys;
  ext.split_index = sys.state_dim;
  ext.original_input_dim = sys.input_dim;
  ext.feedback = [](const Vec&, const Vec&, const Vec& v) { return v; };
  return ext;
}

// ---------------------------------------------------------------------------
// Linear systems and the Brunovsky normal form
// ---------------------------------------------------------------------------

/// Linear system: zdot = A z + B v (continuous) or z+ = A z + B v (discrete).
struct LinearSystem {
  Mat a;                 ///< n x n
  Mat b;                 ///< n x m
  bool discrete = false;
};

/// Builds the Brunovsky canonical form for the given integrator-chain
/// lengths: ones on the superdiagonal within each chain, one input driving
/// the last row of each chain. The result is controllable by construction.
[[nodiscard]] inline LinearSystem brunovsky(const std::vector<int>& chain_lengths) {
  if (chain_lengths.empty()) {
    throw std::invalid_argument("brunovsky: empty chain list");
  }
  for (int len : chain_lengths) {
    if (len <= 0) {
      throw std::invalid_argument("brunovsky: chain lengths must be positive");
    }
  }
  const int n = std::accumulate(chain_lengths.begin(), chain_lengths.end(), 0);
  const int m = static_cast<int>(chain_lengths.size());
  LinearSystem sys;
  sys.a = Mat::Zero(n, n);
  sys.b = Mat::Zero(n, m);
  int row = 0;
  for (int chain = 0; chain < m; ++chain) {
    const int len = chain_lengths[static_cast<std::size_t>(chain)];
    for (int i = 0; i + 1 < len; ++i) {
      sys.a(row + i, row + i + 1) = 1.0;
    }
    sys.b(row + len - 1, chain) = 1.0;
    row += len;
  }
  return sys;
}

/// Rank of the Kalman controllability matrix [B, AB, ..., A^(n-1)B],
/// via SVD with relative singular-value tolerance 1e-10.
[[nodiscard]] inline int controllability_rank(const LinearSystem& sys) {
  const Eigen::Index n = sys.a.rows();
  const Eigen::Index m = sys.b.cols();
  if (sys.a.cols() != n || sys.b.rows() != n) {
    throw std::invalid_argument("controllability_rank: inconsistent matrix dimensions");
  }
  if (n == 0 || m == 0) {
    return 0;
  }
  Mat kalman(n, n * m);
  Mat block = sys.b;
  for (Eigen::Index k = 0; k < n; ++k) {
    kalman.middleCols(k * m, m) = block;
    block = sys.a * block;
  }
  Eigen::JacobiSVD<Mat> svd(kalman);
  svd.setThreshold(1e-10);
  return static_cast<int>(svd.rank());
}

}  // namespace flatdisc
