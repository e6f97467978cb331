#pragma once

#include <Eigen/Dense>
#include <string>
#include <variant>
#include <vector>

#include "handspan/core.hpp"
#include "handspan/geometry.hpp"
#include "handspan/vec3.hpp"

namespace handspan {

struct SphereShape {
  double r = 0;  // mm
};

// Axis along local +X, centered on the local origin (spans [-h/2, h/2]).
struct CylinderShape {
  double r = 0, h = 0;  // mm
};

struct ObjectPart {
  std::variant<SphereShape, CylinderShape> shape;
  Eigen::Isometry3d local = Eigen::Isometry3d::Identity();  // part frame in {O}

  double radius() const {
    if (auto* s = std::get_if<SphereShape>(&shape)) return s->r;
    return std::get<CylinderShape>(shape).r;
  }
};

// Rigid object approximated by spheres/cylinders. `contact_part` designates
// the primitive the two contacts must land on; -1 means undesignated (only
// legal for single-part objects, where part 0 is implied).
struct ObjectModel {
  std::string id;
  std::vector<ObjectPart> parts;
  int contact_part = -1;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();     // o, in {H}
  Eigen::Quaterniond orientation{1, 0, 0, 0};           // q_O (w, x, y, z)

  static ObjectModel sphere(std::string id, double r);
  static ObjectModel cylinder(std::string id, double r, double h);

  int contact_part_index() const;  // resolves the designation; UnsupportedShape
  double contact_radius() const { return parts[contact_part_index()].radius(); }

  Eigen::Isometry3d pose() const {
    Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
    t.linear() = orientation.normalized().toRotationMatrix();
    t.translation() = center;
    return t;
  }
};

// Smallest force-closure-capable distance between two friction contacts on
// the object's contact primitive: 2 r cos(arctan mu).
double min_grasp_distance(const ObjectModel& object, double mu);

// Axis samples (world frame) approximating one part under a posed transform.
// Spheres contribute their center; cylinders max(3, ceil(h/r)) axis points.
template <class T>
struct PartSamples {
  std::vector<V3<T>> points;
  double radius = 0;
};

template <class T>
PartSamples<T> part_samples(const ObjectPart& part, const Transform<T>& pose) {
  PartSamples<T> out;
  out.radius = part.radius();
  Transform<T> frame = pose * Transform<T>::from(part.local);
  if (std::holds_alternative<SphereShape>(part.shape)) {
    out.points.push_back(frame.p);
    return out;
  }
  const auto& cyl = std::get<CylinderShape>(part.shape);
  for (double t : axis_sample_params(cyl.h, cyl.r)) {
    T x = T(cyl.h * (t - 0.5));
    out.points.push_back(frame.point({x, T(0), T(0)}));
  }
  return out;
}

template <class T>
std::vector<PartSamples<T>> object_samples(const ObjectModel& object, const Transform<T>& pose) {
  std::vector<PartSamples<T>> out;
  out.reserve(object.parts.size());
  for (const ObjectPart& p : object.parts) out.push_back(part_samples(p, pose));
  return out;
}

// Distance from a world point to the surface of one part under `pose`
// (signed: negative inside). Used by the in-contact equality.
template <class T>
T part_surface_distance(const V3<T>& p, const ObjectPart& part, const Transform<T>& pose) {
  Transform<T> frame = pose * Transform<T>::from(part.local);
  if (auto* s = std::get_if<SphereShape>(&part.shape))
    return (p - frame.p).norm_safe() - T(s->r);
  const auto& cyl = std::get<CylinderShape>(part.shape);
  V3<T> a = frame.point({T(-cyl.h * 0.5), T(0), T(0)});
  V3<T> b = frame.point({T(cyl.h * 0.5), T(0), T(0)});
  return point_segment_distance(p, a, b) - T(cyl.r);
}

// World-frame center of the designated contact primitive (the "o" entering
// the torque cost and wrench lever arms).
template <class T>
V3<T> contact_part_center(const ObjectModel& object, const Transform<T>& pose) {
  const ObjectPart& part = object.parts[object.contact_part_index()];
  return (pose * Transform<T>::from(part.local)).p;
}

}  // namespace handspan
