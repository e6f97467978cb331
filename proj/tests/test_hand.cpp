#include <doctest.h>

#include <cstdlib>
#include <string>

#include "handspan/hand.hpp"

using namespace handspan;

namespace {

std::string models_dir() {
  const char* env = std::getenv("HANDSPAN_MODELS");
  return env ? env : "models";
}

const HandModel& human() {
  static HandModel m = load_hand_model(models_dir() + "/human_20dof.json");
  return m;
}

const HandModel& allegro() {
  static HandModel m = load_hand_model(models_dir() + "/allegro_16dof.json");
  return m;
}

}  // namespace

TEST_CASE("human hand model: 20 joints, 16 links") {
  const HandModel& m = human();
  CHECK(m.joints.size() == 20);
  CHECK(m.links.size() == 16);  // 5 fingers x 3 + palm
  CHECK(m.fingers.size() == 5);
}

TEST_CASE("allegro hand model: 16 joints, 13 links") {
  const HandModel& m = allegro();
  CHECK(m.joints.size() == 16);
  CHECK(m.links.size() == 13);
  CHECK(m.fingers.size() == 4);
}

TEST_CASE("zero-radius cylinder link is rejected") {
  std::string spec = R"({
    "name": "bad", "palm": {"width": 10, "length": 10, "thickness": 2},
    "fingers": [{"name": "F1", "base_position": [5, 0, 0],
      "joints": [
        {"name": "a", "axis": [0,0,1], "limits_deg": [-10,10]},
        {"name": "b", "axis": [0,1,0], "limits_deg": [-90,0]}],
      "links": [{"name": "L2", "length": 20, "radius": 0}]}]
  })";
  CHECK_THROWS_AS(build_hand_model({spec}), NonpositiveDimension);
}

TEST_CASE("missing palm is rejected") {
  CHECK_THROWS_AS(build_hand_model({R"({"name": "x", "fingers": []})"}), MalformedSpec);
}

TEST_CASE("extended index fingertip sits at the sum of its link lengths") {
  const HandModel& m = human();
  JointConfiguration q;
  q.angles.assign(m.joints.size(), 0.0);
  int tip = m.link_id("F2L4");
  Eigen::Isometry3d t = m.forward_kinematics(q, tip);
  const Link& l = m.link(tip);
  Eigen::Vector3d endpoint = t * Eigen::Vector3d(l.axial_length(), 0, 0);
  const FingerChain& fc = m.fingers[m.finger_of_link(tip)];
  double total = 0;
  for (int lid : fc.link_ids) total += m.link(lid).axial_length();
  double reach = (endpoint - fc.base.translation()).norm();
  CHECK(reach == doctest::Approx(total).epsilon(1e-12));
  CHECK(total <= 92.0);
}

TEST_CASE("longest human finger measures 92mm") {
  const HandModel& m = human();
  const FingerChain& fc = m.fingers[m.finger_of_link(m.link_id("F3L4"))];
  double total = 0;
  for (int lid : fc.link_ids) total += m.link(lid).axial_length();
  CHECK(total == doctest::Approx(92.0));
}

TEST_CASE("allegro finger length is 136.1mm") {
  const HandModel& m = allegro();
  double total = 0;
  for (int lid : m.fingers[1].link_ids) total += m.link(lid).axial_length();
  CHECK(total == doctest::Approx(136.1));
}

TEST_CASE("palm transform is identity for any configuration") {
  const HandModel& m = human();
  JointConfiguration q = m.rest_configuration();
  for (double& a : q.angles) a *= 0.5;
  Eigen::Isometry3d t = m.forward_kinematics(q, m.palm_link);
  CHECK((t.matrix() - Eigen::Matrix4d::Identity()).norm() == doctest::Approx(0.0));
}

TEST_CASE("single revolute joint rotated by pi/2 rotates the child frame") {
  const HandModel& m = human();
  int lid = m.link_id("F2L2");
  const FingerChain& fc = m.fingers[m.finger_of_link(lid)];
  JointConfiguration q;
  q.angles.assign(m.joints.size(), 0.0);
  q.angles[fc.joint_ids[1]] = -kPi / 2;  // flexion about +y
  Eigen::Isometry3d t = m.forward_kinematics(q, lid);
  // hand-computed: R_y(-pi/2) maps +x to +z, so the link now points at +z
  Eigen::Vector3d tip = t * Eigen::Vector3d(m.link(lid).axial_length(), 0, 0);
  Eigen::Vector3d expect = fc.base.translation() + Eigen::Vector3d(0, 0, 40.0);
  CHECK((tip - expect).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("chain composition: distal frame equals proximal frame times local transforms") {
  const HandModel& m = human();
  JointConfiguration q = m.rest_configuration();
  // bend the index finger to a generic pose
  const FingerChain& fc = m.fingers[m.finger_of_link(m.link_id("F2L2"))];
  q.angles[fc.joint_ids[0]] = deg2rad(7);
  q.angles[fc.joint_ids[1]] = deg2rad(-30);
  q.angles[fc.joint_ids[2]] = deg2rad(-45);
  q.angles[fc.joint_ids[3]] = deg2rad(-20);

  Eigen::Isometry3d t2 = m.forward_kinematics(q, m.link_id("F2L2"));
  Eigen::Isometry3d t3 = m.forward_kinematics(q, m.link_id("F2L3"));
  const Joint& j3 = m.joint(fc.joint_ids[2]);
  Eigen::Isometry3d local = j3.origin * Eigen::Isometry3d(
      Eigen::AngleAxisd(q.angles[j3.id], j3.axis));
  CHECK((t3.matrix() - (t2 * local).matrix()).norm() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("active joints per link") {
  const HandModel& m = human();
  CHECK(m.active_joints(m.link_id("F2L4")).size() == 4);
  CHECK(m.active_joints(m.link_id("F2L2")).size() == 2);
  CHECK(m.active_joints(m.palm_link).empty());
  // prefix property: the joint list of L3 extends the joint list of L2
  auto a2 = m.active_joints(m.link_id("F3L2"));
  auto a3 = m.active_joints(m.link_id("F3L3"));
  REQUIRE(a3.size() == a2.size() + 1);
  for (size_t i = 0; i < a2.size(); ++i) CHECK(a2[i] == a3[i]);
}

TEST_CASE("unknown link name throws") {
  CHECK_THROWS_AS(human().link_id("F9L9"), UnknownLink);
}

TEST_CASE("joint-limit clamping brings any vector inside limits") {
  const HandModel& m = human();
  std::vector<double> raw(m.joints.size());
  for (size_t i = 0; i < raw.size(); ++i) raw[i] = (i % 2 ? 50.0 : -50.0);
  JointConfiguration q = m.clamped(raw);
  CHECK(m.within_limits(q));
}

TEST_CASE("rest configuration is within limits") {
  CHECK(human().within_limits(human().rest_configuration()));
  CHECK(allegro().within_limits(allegro().rest_configuration()));
}
