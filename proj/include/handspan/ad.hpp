#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace handspan {

// Gradient vector with a stack-allocated budget covering the largest decision
// vector assembled by the synthesis module.
using GradVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 64, 1>;

// Forward-mode scalar: value plus dense gradient. A zero-size gradient means
// "constant"; that keeps arithmetic involving model constants cheap.
struct Dual {
  double v = 0.0;
  GradVec g;

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit by design
  Dual(double value, GradVec grad) : v(value), g(std::move(grad)) {}

  static Dual variable(double value, int dim, int index) {
    Dual d(value);
    d.g = GradVec::Zero(dim);
    d.g[index] = 1.0;
    return d;
  }

  bool constant() const { return g.size() == 0; }
};

namespace detail {
inline GradVec combine(double ca, const GradVec& a, double cb, const GradVec& b) {
  if (a.size() == 0 && b.size() == 0) return {};
  if (a.size() == 0) return cb * b;
  if (b.size() == 0) return ca * a;
  return ca * a + cb * b;
}
inline GradVec scale(double c, const GradVec& a) {
  if (a.size() == 0) return {};
  return c * a;
}
}  // namespace detail

inline Dual operator+(const Dual& a, const Dual& b) {
  return {a.v + b.v, detail::combine(1.0, a.g, 1.0, b.g)};
}
inline Dual operator-(const Dual& a, const Dual& b) {
  return {a.v - b.v, detail::combine(1.0, a.g, -1.0, b.g)};
}
inline Dual operator-(const Dual& a) { return {-a.v, detail::scale(-1.0, a.g)}; }
inline Dual operator*(const Dual& a, const Dual& b) {
  return {a.v * b.v, detail::combine(b.v, a.g, a.v, b.g)};
}
inline Dual operator/(const Dual& a, const Dual& b) {
  const double inv = 1.0 / b.v;
  return {a.v * inv, detail::combine(inv, a.g, -a.v * inv * inv, b.g)};
}

inline Dual& operator+=(Dual& a, const Dual& b) { a = a + b; return a; }
inline Dual& operator-=(Dual& a, const Dual& b) { a = a - b; return a; }
inline Dual& operator*=(Dual& a, const Dual& b) { a = a * b; return a; }
inline Dual& operator/=(Dual& a, const Dual& b) { a = a / b; return a; }

inline bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
inline bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
inline bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
inline bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }

inline Dual sqrt(const Dual& a) {
  const double s = std::sqrt(a.v);
  return {s, detail::scale(0.5 / (s > 0 ? s : 1e-300), a.g)};
}
inline Dual sin(const Dual& a) { return {std::sin(a.v), detail::scale(std::cos(a.v), a.g)}; }
inline Dual cos(const Dual& a) { return {std::cos(a.v), detail::scale(-std::sin(a.v), a.g)}; }
inline Dual exp(const Dual& a) {
  const double e = std::exp(a.v);
  return {e, detail::scale(e, a.g)};
}
inline Dual atan2(const Dual& y, const Dual& x) {
  const double d = x.v * x.v + y.v * y.v;
  return {std::atan2(y.v, x.v), detail::combine(x.v / d, y.g, -y.v / d, x.g)};
}
inline Dual abs(const Dual& a) { return a.v >= 0 ? a : -a; }
inline Dual max(const Dual& a, const Dual& b) { return a.v >= b.v ? a : b; }
inline Dual min(const Dual& a, const Dual& b) { return a.v <= b.v ? a : b; }

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

// sqrt/min/max/abs lookups for the plain-double instantiation of templated code
using std::abs;
using std::atan2;
using std::cos;
using std::exp;
using std::max;
using std::min;
using std::sin;
using std::sqrt;

}  // namespace handspan
