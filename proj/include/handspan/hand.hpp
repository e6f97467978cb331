#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "handspan/core.hpp"
#include "handspan/geometry.hpp"
#include "handspan/vec3.hpp"

namespace handspan {

struct CylinderGeom {
  double radius = 0;  // mm
  double length = 0;  // mm
};

struct CuboidGeom {
  double width = 0, length = 0, thickness = 0;  // mm
};

struct Joint {
  int id = -1;
  int parent_link = -1;
  std::string name;
  Eigen::Vector3d axis = Eigen::Vector3d::UnitZ();  // unit, in the joint frame
  double lower = 0, upper = 0;                      // radians
  double rest = 0;                                  // initialization pose
  Eigen::Isometry3d origin = Eigen::Isometry3d::Identity();  // parent frame -> joint frame
};

struct Link {
  int id = -1;
  std::string name;  // "F2L3", "PALM"
  std::variant<CylinderGeom, CuboidGeom> geometry;
  int parent_joint = -1;  // -1 for the palm
  Eigen::Isometry3d local_frame = Eigen::Isometry3d::Identity();  // joint frame -> link frame

  bool is_palm() const { return parent_joint < 0; }
  double surface_radius() const {
    if (auto* c = std::get_if<CylinderGeom>(&geometry)) return c->radius;
    return std::get<CuboidGeom>(geometry).thickness * 0.5;
  }
  double axial_length() const {
    if (auto* c = std::get_if<CylinderGeom>(&geometry)) return c->length;
    return std::get<CuboidGeom>(geometry).length;
  }
};

struct FingerChain {
  std::string name;                     // "F1".."F5"
  Eigen::Isometry3d base;               // palm frame -> finger base frame
  std::vector<int> joint_ids;           // ordered from base
  std::vector<int> link_ids;            // L2, L3, L4
};

struct JointConfiguration {
  std::vector<double> angles;  // indexed by joint id, radians
};

// Articulated hand: a tree of revolute joints and primitive-geometry links
// rooted at the palm. Immutable after construction; all queries are pure.
class HandModel {
 public:
  std::string name;
  std::vector<Link> links;
  std::vector<Joint> joints;
  std::vector<FingerChain> fingers;
  int palm_link = 0;
  Rectangle3 palm_inner;     // inner contact surface
  Rectangle3 palm_midplane;  // cuboid mid-plane, for object clearance

  int link_id(const std::string& link_name) const;
  const Link& link(int id) const;
  const Joint& joint(int id) const;
  int finger_of_link(int link_id) const;  // -1 for palm

  // joints preceding the link along its chain; empty for the palm
  std::vector<int> active_joints(int link_id) const;

  JointConfiguration rest_configuration() const;
  JointConfiguration clamped(const std::vector<double>& raw) const;
  bool within_limits(const JointConfiguration& q, double tol = 1e-9) const;

  // Link frames in the hand frame {H} for a full joint vector. The scalar is
  // templated so synthesis can differentiate through the chain.
  template <class T>
  std::vector<Transform<T>> link_frames(const std::vector<T>& angles) const {
    std::vector<Transform<T>> out(links.size());
    out[palm_link] = Transform<T>::identity();
    for (const FingerChain& fc : fingers) {
      Transform<T> t = Transform<T>::from(fc.base);
      size_t li = 0;
      for (size_t ji = 0; ji < fc.joint_ids.size(); ++ji) {
        const Joint& j = joints[fc.joint_ids[ji]];
        t = t * Transform<T>::from(j.origin);
        Transform<T> rot;
        rot.R = axis_angle(j.axis, angles[j.id]);
        t = t * rot;
        // links attach after the second joint of the pair at the base, then
        // after every subsequent joint
        if (ji >= 1 && li < fc.link_ids.size()) {
          const Link& l = links[fc.link_ids[li]];
          out[l.id] = t * Transform<T>::from(l.local_frame);
          ++li;
        }
      }
    }
    return out;
  }

  Eigen::Isometry3d forward_kinematics(const JointConfiguration& q, int link_id) const;
};

struct HandSpecDocument {
  std::string json_text;
};

HandModel build_hand_model(const HandSpecDocument& spec);
HandModel load_hand_model(const std::string& path);

}  // namespace handspan
