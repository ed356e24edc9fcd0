#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "ritznet/common.hpp"

namespace ritznet {

// Deterministic random stream. mt19937_64 is the only engine whose output is
// bit-specified by the standard, and all transforms below are hand-rolled, so
// a (seed, draw sequence) pair reproduces bit-for-bit everywhere.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t raw() { return eng_(); }

  // Uniform on (0,1), never returning 0 or 1.
  double uniform() {
    double u;
    do {
      u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    } while (u <= 0.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Polar Box-Muller with one cached deviate.
  double normal() {
    if (has_cache_) {
      has_cache_ = false;
      return cache_;
    }
    double a, b, s;
    do {
      a = 2.0 * uniform() - 1.0;
      b = 2.0 * uniform() - 1.0;
      s = a * a + b * b;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cache_ = b * f;
    has_cache_ = true;
    return a * f;
  }

  // Marsaglia-Tsang for shape >= 1, boost through Gamma(a+1) below 1.
  // Unit scale. Stays accurate for very large shapes (a ~ 1e4).
  double gamma(double shape) {
    if (!(shape > 0.0)) throw ConfigError("gamma shape must be positive");
    if (shape < 1.0) {
      const double g = gamma(shape + 1.0);
      return g * std::pow(uniform(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, veval;
      do {
        x = normal();
        veval = 1.0 + c * x;
      } while (veval <= 0.0);
      const double v3 = veval * veval * veval;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v3;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v3 + std::log(v3))) return d * v3;
    }
  }

  // Beta(a,b) via the ratio of two gamma draws; exact for all positive
  // parameters, no rejection blow-up at extreme shapes.
  double beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("beta parameters must be positive");
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

 private:
  std::mt19937_64 eng_;
  double cache_ = 0.0;
  bool has_cache_ = false;
};

}  // namespace ritznet
