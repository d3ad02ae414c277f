#pragma once

#include <cstdint>

#include <Eigen/Core>

namespace flatdisc {

/// SplitMix64 generator for seeded sample fixtures.
///
/// Deliberately not a <random> engine + distribution pair: the standard
/// distributions are implementation-defined, and seeded fixtures here must
/// reproduce the same points on every platform and standard library.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform draw in [0, 1) with 53 random bits.
  double uniform01() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  /// Uniform draw in [lo, hi).
  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform01();
  }

  /// Uniform point in the axis-aligned box center +- radius (per coordinate).
  Eigen::VectorXd in_box(const Eigen::VectorXd& center, double radius) {
    Eigen::VectorXd p(center.size());
    for (Eigen::Index i = 0; i < center.size(); ++i) {
      p(i) = center(i) + uniform(-radius, radius);
    }
    return p;
  }

 private:
  std::uint64_t state_;
};

}  // namespace flatdisc
