#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "gridse/types.hpp"

namespace gridse {

/// Deterministic Gaussian stream. std::normal_distribution is not pinned
/// across standard libraries, so draws go through a fixed Box-Muller
/// transform on top of mt19937_64.
class GaussianSampler {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/box-muller-v1";

  explicit GaussianSampler(std::uint64_t seed) : gen_(seed) {}

  /// One draw from N(0, sigma^2).
  Real next(Real sigma) {
    if (sigma == 0.0) return 0.0;
    if (have_spare_) {
      have_spare_ = false;
      return sigma * spare_;
    }
    // u1 in (0,1], u2 in [0,1)
    const Real u1 = (static_cast<Real>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    const Real u2 = static_cast<Real>(gen_() >> 11) * 0x1.0p-53;
    const Real radius = std::sqrt(-2.0 * std::log(u1));
    spare_ = radius * std::sin(2.0 * kPi * u2);
    have_spare_ = true;
    return sigma * radius * std::cos(2.0 * kPi * u2);
  }

 private:
  std::mt19937_64 gen_;
  Real spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace gridse
