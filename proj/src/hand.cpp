#include "handspan/hand.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace handspan {
namespace {

using nlohmann::json;

Eigen::Vector3d get_vec3(const json& j, const std::string& key) {
  if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3)
    throw MalformedSpec("expected 3-vector at '" + key + "'");
  return {j[key][0].get<double>(), j[key][1].get<double>(), j[key][2].get<double>()};
}

Eigen::Isometry3d base_transform(const json& jf) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.translation() = get_vec3(jf, "base_position");
  if (jf.contains("base_rpy_deg")) {
    Eigen::Vector3d rpy = deg2rad(1.0) * get_vec3(jf, "base_rpy_deg");
    t.linear() = (Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
                  Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
                  Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()))
                     .toRotationMatrix();
  }
  return t;
}

double positive(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw MalformedSpec("missing '" + key + "' in " + where);
  double v = j[key].get<double>();
  if (!(v > 0)) throw NonpositiveDimension(where + "." + key + " must be positive");
  return v;
}

}  // namespace

int HandModel::link_id(const std::string& link_name) const {
  for (const Link& l : links)
    if (l.name == link_name) return l.id;
  throw UnknownLink("unknown link '" + link_name + "'");
}

const Link& HandModel::link(int id) const {
  if (id < 0 || id >= static_cast<int>(links.size())) throw UnknownLink("link id out of range");
  return links[id];
}

const Joint& HandModel::joint(int id) const {
  if (id < 0 || id >= static_cast<int>(joints.size())) throw OutOfBounds("joint id out of range");
  return joints[id];
}

int HandModel::finger_of_link(int lid) const {
  for (size_t f = 0; f < fingers.size(); ++f)
    for (int l : fingers[f].link_ids)
      if (l == lid) return static_cast<int>(f);
  return -1;
}

std::vector<int> HandModel::active_joints(int lid) const {
  std::vector<int> out;
  int f = finger_of_link(lid);
  if (f < 0) return out;  // palm pose is fixed
  const FingerChain& fc = fingers[f];
  // link local index in the chain
  size_t li = 0;
  while (fc.link_ids[li] != lid) ++li;
  // joints 0..li+1 precede link li (two joints share the finger base)
  for (size_t ji = 0; ji <= li + 1 && ji < fc.joint_ids.size(); ++ji)
    out.push_back(fc.joint_ids[ji]);
  return out;
}

JointConfiguration HandModel::rest_configuration() const {
  JointConfiguration q;
  q.angles.resize(joints.size(), 0.0);
  for (const Joint& j : joints) q.angles[j.id] = j.rest;
  return q;
}

JointConfiguration HandModel::clamped(const std::vector<double>& raw) const {
  if (raw.size() != joints.size()) throw OutOfBounds("joint vector size mismatch");
  JointConfiguration q;
  q.angles.resize(raw.size());
  for (const Joint& j : joints)
    q.angles[j.id] = std::min(std::max(raw[j.id], j.lower), j.upper);
  return q;
}

bool HandModel::within_limits(const JointConfiguration& q, double tol) const {
  if (q.angles.size() != joints.size()) return false;
  for (const Joint& j : joints)
    if (q.angles[j.id] < j.lower - tol || q.angles[j.id] > j.upper + tol) return false;
  return true;
}

Eigen::Isometry3d HandModel::forward_kinematics(const JointConfiguration& q, int lid) const {
  link(lid);
  auto frames = link_frames<double>(q.angles);
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = frames[lid].R.value();
  t.translation() = frames[lid].p.value();
  return t;
}

HandModel build_hand_model(const HandSpecDocument& spec) {
  json doc;
  try {
    doc = json::parse(spec.json_text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("hand spec is not valid JSON: ") + e.what());
  }
  HandModel m;
  m.name = doc.value("name", "hand");
  if (!doc.contains("palm")) throw MalformedSpec("hand spec missing 'palm'");
  CuboidGeom palm_geom;
  palm_geom.width = positive(doc["palm"], "width", "palm");
  palm_geom.length = positive(doc["palm"], "length", "palm");
  palm_geom.thickness = positive(doc["palm"], "thickness", "palm");

  Link palm;
  palm.id = 0;
  palm.name = "PALM";
  palm.geometry = palm_geom;
  palm.parent_joint = -1;
  m.links.push_back(palm);
  m.palm_link = 0;

  m.palm_inner.center = Eigen::Vector3d(0, 0, palm_geom.thickness * 0.5);
  m.palm_inner.ax = Eigen::Vector3d::UnitX();
  m.palm_inner.ay = Eigen::Vector3d::UnitY();
  m.palm_inner.normal = Eigen::Vector3d::UnitZ();
  m.palm_inner.hx = palm_geom.length * 0.5;
  m.palm_inner.hy = palm_geom.width * 0.5;
  m.palm_midplane = m.palm_inner;
  m.palm_midplane.center.z() = 0;

  if (!doc.contains("fingers") || !doc["fingers"].is_array() || doc["fingers"].empty())
    throw MalformedSpec("hand spec needs at least one finger");

  for (const json& jf : doc["fingers"]) {
    FingerChain fc;
    fc.name = jf.value("name", "F?");
    fc.base = base_transform(jf);
    const json& jjoints = jf.at("joints");
    const json& jlinks = jf.at("links");
    if (!jjoints.is_array() || !jlinks.is_array() || jjoints.size() != jlinks.size() + 1)
      throw MalformedSpec("finger " + fc.name + ": need one more joint than links");

    std::vector<double> lengths;
    for (size_t li = 0; li < jlinks.size(); ++li) {
      const json& jl = jlinks[li];
      Link l;
      CylinderGeom g;
      g.length = positive(jl, "length", fc.name);
      g.radius = positive(jl, "radius", fc.name);
      lengths.push_back(g.length);
      l.geometry = g;
      l.name = fc.name + jl.value("name", "L" + std::to_string(li + 2));
      l.id = static_cast<int>(m.links.size());
      // parent joint filled in once joints are numbered
      m.links.push_back(l);
      fc.link_ids.push_back(l.id);
    }

    for (size_t ji = 0; ji < jjoints.size(); ++ji) {
      const json& jj = jjoints[ji];
      Joint j;
      j.id = static_cast<int>(m.joints.size());
      j.name = fc.name + "/" + jj.value("name", "j" + std::to_string(ji));
      j.axis = get_vec3(jj, "axis");
      if (j.axis.norm() < 1e-9) throw MalformedSpec(j.name + ": zero joint axis");
      j.axis.normalize();
      if (!jj.contains("limits_deg") || jj["limits_deg"].size() != 2)
        throw MalformedSpec(j.name + ": missing limits_deg");
      j.lower = deg2rad(jj["limits_deg"][0].get<double>());
      j.upper = deg2rad(jj["limits_deg"][1].get<double>());
      if (j.lower > j.upper) throw MalformedSpec(j.name + ": lower limit above upper");
      j.rest = deg2rad(jj.value("rest_deg", 0.0));
      if (j.rest < j.lower - 1e-12 || j.rest > j.upper + 1e-12)
        throw MalformedSpec(j.name + ": rest pose outside limits");
      j.origin = Eigen::Isometry3d::Identity();
      if (ji >= 2) j.origin.translation() = Eigen::Vector3d(lengths[ji - 2], 0, 0);
      m.joints.push_back(j);
      fc.joint_ids.push_back(j.id);
    }
    for (size_t li = 0; li < fc.link_ids.size(); ++li) {
      m.links[fc.link_ids[li]].parent_joint = fc.joint_ids[li + 1];
      m.joints[fc.joint_ids[li + 1]].parent_link = li == 0 ? m.palm_link : fc.link_ids[li - 1];
    }
    if (!fc.joint_ids.empty()) m.joints[fc.joint_ids[0]].parent_link = m.palm_link;
    m.fingers.push_back(std::move(fc));
  }

  // duplicate link names indicate a malformed tree
  for (size_t i = 0; i < m.links.size(); ++i)
    for (size_t k = i + 1; k < m.links.size(); ++k)
      if (m.links[i].name == m.links[k].name)
        throw MalformedSpec("duplicate link name '" + m.links[i].name + "'");
  return m;
}

HandModel load_hand_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open hand spec '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return build_hand_model({ss.str()});
}

}  // namespace handspan
