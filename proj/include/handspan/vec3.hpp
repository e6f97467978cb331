#pragma once

#include <Eigen/Dense>

#include "handspan/ad.hpp"

namespace handspan {

// Minimal 3-vector / rigid-transform types templated on the scalar so the
// same kinematics and distance code runs on doubles and on AD duals.

template <class T>
struct V3 {
  T x{}, y{}, z{};

  V3() = default;
  V3(T x_, T y_, T z_) : x(std::move(x_)), y(std::move(y_)), z(std::move(z_)) {}

  static V3 from(const Eigen::Vector3d& v) { return {T(v.x()), T(v.y()), T(v.z())}; }

  Eigen::Vector3d value() const { return {value_of(x), value_of(y), value_of(z)}; }

  V3 operator+(const V3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  V3 operator-(const V3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  V3 operator-() const { return {-x, -y, -z}; }
  V3 operator*(const T& s) const { return {x * s, y * s, z * s}; }

  T dot(const V3& o) const { return x * o.x + y * o.y + z * o.z; }
  V3 cross(const V3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  T squared_norm() const { return dot(*this); }
  T norm() const { return sqrt(squared_norm()); }
  // norm guarded against the zero point, for objective terms differentiated at
  // near-alignment (see the grasp-axis cost)
  T norm_safe() const { return sqrt(squared_norm() + T(1e-18)); }
  V3 normalized() const {
    T n = norm();
    return {x / n, y / n, z / n};
  }
};

template <class T>
V3<T> operator*(const T& s, const V3<T>& v) { return v * s; }

template <class T>
struct Mat3 {
  // column vectors
  V3<T> cx, cy, cz;

  static Mat3 identity() {
    return {{T(1), T(0), T(0)}, {T(0), T(1), T(0)}, {T(0), T(0), T(1)}};
  }
  static Mat3 from(const Eigen::Matrix3d& m) {
    return {V3<T>::from(m.col(0)), V3<T>::from(m.col(1)), V3<T>::from(m.col(2))};
  }

  V3<T> operator*(const V3<T>& v) const { return cx * v.x + cy * v.y + cz * v.z; }
  Mat3 operator*(const Mat3& o) const { return {(*this) * o.cx, (*this) * o.cy, (*this) * o.cz}; }

  Eigen::Matrix3d value() const {
    Eigen::Matrix3d m;
    m.col(0) = cx.value();
    m.col(1) = cy.value();
    m.col(2) = cz.value();
    return m;
  }
};

// Rodrigues rotation about a fixed unit axis (axis is model data, never a
// variable, so it stays a plain double vector).
template <class T>
Mat3<T> axis_angle(const Eigen::Vector3d& axis, const T& angle) {
  const T c = cos(angle), s = sin(angle);
  const T one_c = T(1) - c;
  const double ux = axis.x(), uy = axis.y(), uz = axis.z();
  Mat3<T> r;
  r.cx = {c + ux * ux * one_c, uy * ux * one_c + uz * s, uz * ux * one_c - uy * s};
  r.cy = {ux * uy * one_c - uz * s, c + uy * uy * one_c, uz * uy * one_c + ux * s};
  r.cz = {ux * uz * one_c + uy * s, uy * uz * one_c - ux * s, c + uz * uz * one_c};
  return r;
}

template <class T>
struct Transform {
  Mat3<T> R = Mat3<T>::identity();
  V3<T> p{};

  static Transform identity() { return {}; }
  static Transform from(const Eigen::Isometry3d& iso) {
    return {Mat3<T>::from(iso.linear()), V3<T>::from(iso.translation())};
  }

  Transform operator*(const Transform& o) const { return {R * o.R, R * o.p + p}; }
  V3<T> point(const V3<T>& v) const { return R * v + p; }
  V3<T> vector(const V3<T>& v) const { return R * v; }

  Eigen::Isometry3d value() const {
    Eigen::Isometry3d iso = Eigen::Isometry3d::Identity();
    iso.linear() = R.value();
    iso.translation() = p.value();
    return iso;
  }
};

// Rotation from a (not necessarily normalized) quaternion (x, y, z, w).
// Division by the squared norm keeps the map smooth while the unit-norm
// equality is being enforced by the solver.
template <class T>
Mat3<T> quat_to_rot(const T& qx, const T& qy, const T& qz, const T& qw) {
  const T n2 = qx * qx + qy * qy + qz * qz + qw * qw;
  const T s = T(2) / n2;
  Mat3<T> r;
  r.cx = {T(1) - s * (qy * qy + qz * qz), s * (qx * qy + qz * qw), s * (qx * qz - qy * qw)};
  r.cy = {s * (qx * qy - qz * qw), T(1) - s * (qx * qx + qz * qz), s * (qy * qz + qx * qw)};
  r.cz = {s * (qx * qz + qy * qw), s * (qy * qz - qx * qw), T(1) - s * (qx * qx + qy * qy)};
  return r;
}

}  // namespace handspan
