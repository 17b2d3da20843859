#pragma once

#include <cstdint>
#include <random>

#include "saddlenet/common.hpp"

namespace saddlenet {

// Reproducible uniform draws. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard; the double conversion takes the top
// 53 bits, so a seed reproduces the same values on any conforming platform.
// std::uniform_real_distribution is avoided because its algorithm is
// implementation-defined.
class Rng {
 public:
  static constexpr const char* kAlgorithm = "mt19937_64/top53-v1";

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  std::uint64_t bits() { return engine_(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(unit() * static_cast<double>(n)); }

  Vector uniform_vector(Eigen::Index n, double lo, double hi) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace saddlenet
