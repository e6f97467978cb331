#pragma once

#include <Eigen/Dense>
#include <vector>

#include "handspan/hand.hpp"
#include "handspan/vec3.hpp"

namespace handspan {

// Where on a link a contact sits. Cylinder links use (alpha, phi): height
// ratio along the axis and angular coordinate around it; the palm uses
// in-plane offsets (ux, uy) on the inner surface.
struct ContactParam {
  int link = -1;
  double alpha = 0;   // [0, 1]
  double phi = 0;     // (-pi, pi]
  double ux = 0, uy = 0;  // |ux| <= palm hx, |uy| <= palm hy
};

template <class T>
struct ContactFrameT {
  V3<T> p;       // position in {H}, mm
  V3<T> normal;  // unit, Z of the contact frame (outward from the link)
  V3<T> t1, t2;  // tangent basis; (t1, t2, normal) right-handed
};

using ContactFrame = ContactFrameT<double>;

// Contact frame on a cylinder link given its posed frame. The radial
// direction at phi spans the link-frame z/y plane; t1 is the link axis.
template <class T>
ContactFrameT<T> cylinder_contact_frame(const Transform<T>& link_frame, double link_length,
                                        double link_radius, const T& alpha, const T& phi) {
  ContactFrameT<T> f;
  const T c = cos(phi), s = sin(phi);
  V3<T> radial = link_frame.vector({T(0), s, c});  // cos->z, sin->y of the link frame
  V3<T> axis = link_frame.vector({T(1), T(0), T(0)});
  f.p = link_frame.point({alpha * T(link_length), T(0), T(0)}) + radial * T(link_radius);
  f.normal = radial;
  f.t1 = axis;
  f.t2 = f.normal.cross(f.t1);
  return f;
}

// Contact frame on the palm inner surface at in-plane offsets (ux, uy).
template <class T>
ContactFrameT<T> palm_contact_frame(const Rectangle3& inner, const T& ux, const T& uy) {
  ContactFrameT<T> f;
  f.p = V3<T>::from(inner.center) + V3<T>::from(inner.ax) * ux + V3<T>::from(inner.ay) * uy;
  f.normal = V3<T>::from(inner.normal);
  f.t1 = V3<T>::from(inner.ax);
  f.t2 = f.normal.cross(f.t1);
  return f;
}

// Bounds-checked evaluation at a full joint configuration.
ContactFrame contact_position(const HandModel& model, const JointConfiguration& q,
                              const ContactParam& cp);

struct FrictionCone {
  double mu = 0;
  int n_edges = 0;
  std::vector<Eigen::Vector3d> edges;  // unit vectors in {H}
};

// N_f-sided pyramid around the contact normal: edge k is the normalized
// mu*cos(2 pi k / N_f) * t1 + normal + mu*sin(2 pi k / N_f) * t2, k = 1..N_f.
FrictionCone friction_cone(double mu, int n_edges, const ContactFrame& frame);

struct PrimitiveWrench {
  Eigen::Vector3d force;
  Eigen::Vector3d torque;  // d x f, d = contact position - object center, mm

  Eigen::Matrix<double, 6, 1> vec() const {
    Eigen::Matrix<double, 6, 1> w;
    w << force, torque;
    return w;
  }
};

std::vector<PrimitiveWrench> primitive_wrenches(const std::vector<ContactFrame>& frames,
                                                const Eigen::Vector3d& object_center,
                                                const std::vector<FrictionCone>& cones);

struct ForceClosureResult {
  bool feasible = false;
  std::vector<double> coefficients;  // witness: >= 0, sums to 1 when feasible
  double residual = 0;               // norm of the convex combination achieved
};

// Decides whether the origin of 6-D wrench space lies in the convex hull of
// the primitive wrenches (min-norm-point computation with witness).
ForceClosureResult force_closure_feasible(const std::vector<PrimitiveWrench>& wrenches);

}  // namespace handspan
