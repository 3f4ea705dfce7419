#pragma once

#include <cmath>
#include <cstdint>

#include "deltacert/types.hpp"

namespace deltacert {

/// Counter-based random stream. Each (seed, stream indices) tuple opens an
/// independent, reproducible sequence, so sample i of trial j can be drawn
/// on any thread and still produce bit-identical results.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t s1 = 0,
                      std::uint64_t s2 = 0, std::uint64_t s3 = 0) {
    state_ = mix(seed + 0x9E3779B97F4A7C15ULL);
    state_ = mix(state_ ^ mix(s1 + 0xBF58476D1CE4E5B9ULL));
    state_ = mix(state_ ^ mix(s2 + 0x94D049BB133111EBULL));
    state_ = mix(state_ ^ mix(s3 + 0xD6E8FEB86659FD93ULL));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Standard normal via Box-Muller; the paired value is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Uniform point on the radius-r sphere in R^n (normalized Gaussian
/// direction). In one dimension this degenerates to +-radius up to
/// normalization rounding.
inline Vector sample_sphere(int n, double radius, CounterRng& rng) {
  Vector v(n);
  if (radius == 0.0) {
    v.setZero();
    return v;
  }
  double norm = 0.0;
  do {
    for (int i = 0; i < n; ++i) v[i] = rng.gaussian();
    norm = v.norm();
  } while (norm < 1e-12);
  return v * (radius / norm);
}

/// Uniform point in the radius-r ball in R^n.
inline Vector sample_ball(int n, double radius, CounterRng& rng) {
  const double u = rng.uniform01();
  const double r = radius * std::pow(u, 1.0 / n);
  return sample_sphere(n, r, rng);
}

}  // namespace deltacert
