#pragma once

#include <cmath>
#include <vector>

#include "handspan/core.hpp"
#include "handspan/vec3.hpp"

namespace handspan {

// Distance primitives shared by reachability analysis and constraint
// assembly. Templated on the scalar so the synthesis module can differentiate
// through them.

template <class T>
T clamp01(const T& t) {
  if (t < T(0)) return T(0);
  if (t > T(1)) return T(1);
  return t;
}

template <class T>
T point_segment_distance(const V3<T>& p, const V3<T>& a, const V3<T>& b) {
  const V3<T> ab = b - a;
  const T den = ab.squared_norm();
  if (value_of(den) < 1e-18) return (p - a).norm_safe();
  const T t = clamp01((p - a).dot(ab) / den);
  return (p - (a + ab * t)).norm_safe();
}

template <class T>
T segment_segment_distance(const V3<T>& p1, const V3<T>& q1, const V3<T>& p2,
                           const V3<T>& q2) {
  // standard clamped closest-point computation (Ericson)
  const V3<T> d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const T a = d1.squared_norm(), e = d2.squared_norm(), f = d2.dot(r);
  T s(0), t(0);
  const double tiny = 1e-18;
  if (value_of(a) < tiny && value_of(e) < tiny) return (p1 - p2).norm_safe();
  if (value_of(a) < tiny) {
    t = clamp01(f / e);
  } else {
    const T c = d1.dot(r);
    if (value_of(e) < tiny) {
      s = clamp01(-c / a);
    } else {
      const T b = d1.dot(d2);
      const T den = a * e - b * b;
      if (value_of(den) > tiny) s = clamp01((b * f - c * e) / den);
      t = (b * s + f) / e;
      if (t < T(0)) {
        t = T(0);
        s = clamp01(-c / a);
      } else if (t > T(1)) {
        t = T(1);
        s = clamp01((b - c) / a);
      }
    }
  }
  return ((p1 + d1 * s) - (p2 + d2 * t)).norm_safe();
}

// Axis-aligned rectangle sitting in a local frame: center, two in-plane unit
// axes with half-extents, and a normal. Used for the palm inner surface.
struct Rectangle3 {
  Eigen::Vector3d center;
  Eigen::Vector3d ax, ay;  // unit in-plane axes
  Eigen::Vector3d normal;
  double hx = 0, hy = 0;  // half-extents, mm
};

// In-plane coordinates plus signed normal offset of p relative to the
// rectangle plane.
template <class T>
struct RectProjection {
  T u, v, offset;
};

template <class T>
RectProjection<T> point_rectangle_projection(const V3<T>& p, const Rectangle3& rect) {
  const V3<T> r = p - V3<T>::from(rect.center);
  return {r.dot(V3<T>::from(rect.ax)), r.dot(V3<T>::from(rect.ay)),
          r.dot(V3<T>::from(rect.normal))};
}

// Euclidean distance from a point to the (bounded) rectangle region.
template <class T>
T point_rectangle_distance(const V3<T>& p, const Rectangle3& rect) {
  RectProjection<T> pr = point_rectangle_projection(p, rect);
  auto excess = [](const T& c, double h) {
    T e = abs(c) - T(h);
    return e > T(0) ? e : T(0);
  };
  const T du = excess(pr.u, rect.hx), dv = excess(pr.v, rect.hy);
  return sqrt(du * du + dv * dv + pr.offset * pr.offset + T(1e-18));
}

// Number of axis samples approximating a cylinder of height h, radius r.
inline int cylinder_axis_sample_count(double h, double r) {
  if (h <= 0 || r <= 0) throw NonpositiveDimension("cylinder dimensions must be positive");
  return std::max(3, static_cast<int>(std::ceil(h / r)));
}

struct SegmentSamples {
  std::vector<Eigen::Vector3d> points;
  double spacing = 0;
};

// Uniformly spaced points spanning the central axis [0, h] along +X.
SegmentSamples sample_cylinder_axis(double h, double r);

// Sample parameters t in [0, 1] for a cylinder axis; shared by templated
// constraint code that positions samples itself.
std::vector<double> axis_sample_params(double h, double r);

}  // namespace handspan
