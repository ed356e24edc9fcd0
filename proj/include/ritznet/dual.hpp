#pragma once

#include <cmath>

#include "ritznet/common.hpp"

namespace ritznet {

// Truncated Taylor value: function value plus first and pure second spatial
// derivatives along each axis. Mixed second derivatives are not carried; no
// formulation in this library needs them. `order` tracks how many derivative
// levels are valid (0, 1 or 2); combining values of different order yields
// the lower one.
struct DualValue {
  double v = 0.0;
  std::array<double, kMaxDim> d1{0.0, 0.0};
  std::array<double, kMaxDim> d2{0.0, 0.0};
  int dim = 1;
  int order = 2;

  DualValue() = default;

  // A constant: all spatial derivatives vanish exactly.
  static DualValue constant(double c, int dim = 1) {
    DualValue r;
    r.v = c;
    r.dim = dim;
    r.order = 2;
    return r;
  }

  // The coordinate variable of one axis: d/dx_axis = 1, second derivative 0.
  static DualValue axis(double x, int ax, int dim, int order = 2) {
    DualValue r;
    r.v = x;
    r.d1[static_cast<size_t>(ax)] = 1.0;
    r.dim = dim;
    r.order = order;
    return r;
  }

  double d(int ax) const { return d1[static_cast<size_t>(ax)]; }
  double dd(int ax) const { return d2[static_cast<size_t>(ax)]; }
};

namespace detail {
inline int join_order(const DualValue& a, const DualValue& b) {
  return a.order < b.order ? a.order : b.order;
}
}  // namespace detail

inline DualValue operator+(const DualValue& a, const DualValue& b) {
  DualValue r;
  r.dim = a.dim;
  r.order = detail::join_order(a, b);
  r.v = a.v + b.v;
  for (int i = 0; i < r.dim; ++i) {
    r.d1[i] = a.d1[i] + b.d1[i];
    r.d2[i] = a.d2[i] + b.d2[i];
  }
  return r;
}

inline DualValue operator-(const DualValue& a, const DualValue& b) {
  DualValue r;
  r.dim = a.dim;
  r.order = detail::join_order(a, b);
  r.v = a.v - b.v;
  for (int i = 0; i < r.dim; ++i) {
    r.d1[i] = a.d1[i] - b.d1[i];
    r.d2[i] = a.d2[i] - b.d2[i];
  }
  return r;
}

inline DualValue operator-(const DualValue& a) {
  DualValue r;
  r.dim = a.dim;
  r.order = a.order;
  r.v = -a.v;
  for (int i = 0; i < r.dim; ++i) {
    r.d1[i] = -a.d1[i];
    r.d2[i] = -a.d2[i];
  }
  return r;
}

inline DualValue operator*(const DualValue& a, const DualValue& b) {
  DualValue r;
  r.dim = a.dim;
  r.order = detail::join_order(a, b);
  r.v = a.v * b.v;
  for (int i = 0; i < r.dim; ++i) {
    r.d1[i] = a.d1[i] * b.v + a.v * b.d1[i];
    r.d2[i] = a.d2[i] * b.v + 2.0 * a.d1[i] * b.d1[i] + a.v * b.d2[i];
  }
  return r;
}

inline DualValue operator*(double s, const DualValue& a) {
  DualValue r = a;
  r.v *= s;
  for (int i = 0; i < r.dim; ++i) {
    r.d1[i] *= s;
    r.d2[i] *= s;
  }
  return r;
}

inline DualValue operator*(const DualValue& a, double s) { return s * a; }

inline DualValue operator+(const DualValue& a, double s) {
  DualValue r = a;
  r.v += s;
  return r;
}

inline DualValue operator+(double s, const DualValue& a) { return a + s; }

inline DualValue operator-(const DualValue& a, double s) { return a + (-s); }

inline DualValue operator-(double s, const DualValue& a) { return (-a) + s; }

// Unary composition g(f) with g', g'' supplied: first-order chain rule plus
// Faa di Bruno at order 2 (per axis, pure derivatives only).
inline DualValue compose(const DualValue& f, double g, double dg, double ddg) {
  DualValue r;
  r.dim = f.dim;
  r.order = f.order;
  r.v = g;
  for (int i = 0; i < r.dim; ++i) {
    r.d1[i] = dg * f.d1[i];
    r.d2[i] = ddg * f.d1[i] * f.d1[i] + dg * f.d2[i];
  }
  return r;
}

inline DualValue inv(const DualValue& a) {
  const double iv = 1.0 / a.v;
  return compose(a, iv, -iv * iv, 2.0 * iv * iv * iv);
}

inline DualValue operator/(const DualValue& a, const DualValue& b) { return a * inv(b); }

inline DualValue operator/(const DualValue& a, double s) { return a * (1.0 / s); }

inline DualValue operator/(double s, const DualValue& a) { return s * inv(a); }

inline DualValue tanh(const DualValue& a) {
  const double t = std::tanh(a.v);
  const double s = 1.0 - t * t;
  return compose(a, t, s, -2.0 * t * s);
}

inline DualValue sigmoid(const DualValue& a) {
  const double g = 1.0 / (1.0 + std::exp(-a.v));
  const double dg = g * (1.0 - g);
  return compose(a, g, dg, dg * (1.0 - 2.0 * g));
}

inline DualValue sin(const DualValue& a) {
  return compose(a, std::sin(a.v), std::cos(a.v), -std::sin(a.v));
}

inline DualValue cos(const DualValue& a) {
  return compose(a, std::cos(a.v), -std::sin(a.v), -std::cos(a.v));
}

inline DualValue exp(const DualValue& a) {
  const double e = std::exp(a.v);
  return compose(a, e, e, e);
}

inline DualValue log(const DualValue& a) {
  return compose(a, std::log(a.v), 1.0 / a.v, -1.0 / (a.v * a.v));
}

inline DualValue sqrt(const DualValue& a) {
  const double s = std::sqrt(a.v);
  return compose(a, s, 0.5 / s, -0.25 / (s * a.v));
}

// pow with real exponent; base must stay positive when p is non-integral.
inline DualValue pow(const DualValue& a, double p) {
  const double g = std::pow(a.v, p);
  const double dg = p * std::pow(a.v, p - 1.0);
  const double ddg = p * (p - 1.0) * std::pow(a.v, p - 2.0);
  return compose(a, g, dg, ddg);
}

inline DualValue square(const DualValue& a) { return a * a; }

}  // namespace ritznet
