#include "handspan/reachability.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>

namespace handspan {

namespace {

std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// chain transform from {H} to the link frame for one finger prefix
Eigen::Isometry3d chain_transform(const HandModel& model, const FingerChain& fc,
                                  size_t link_index, const std::vector<double>& chain_angles) {
  Eigen::Isometry3d t = fc.base;
  size_t li = 0;
  for (size_t ji = 0; ji < fc.joint_ids.size(); ++ji) {
    const Joint& j = model.joint(fc.joint_ids[ji]);
    t = t * j.origin * Eigen::AngleAxisd(chain_angles[ji], j.axis);
    if (ji >= 1) {
      if (li == link_index) return t;
      ++li;
    }
  }
  throw OutOfBounds("link index beyond chain");
}

}  // namespace

ReachableSpace build_reachable_space(const HandModel& model, const PinnedJoints& pinned,
                                     int link, int grid) {
  ReachableSpace out;
  out.link = link;
  out.joint_grid = grid;

  const Link& l = model.link(link);
  if (l.is_palm()) {
    const Rectangle3& r = model.palm_inner;
    std::vector<Eigen::Vector3d> corners;
    for (int sx : {-1, 1})
      for (int sy : {-1, 1}) corners.push_back(r.center + sx * r.hx * r.ax + sy * r.hy * r.ay);
    out.hull = convex_hull(corners);
    out.sample_count = 4;
    return out;
  }

  int finger = model.finger_of_link(link);
  const FingerChain& fc = model.fingers[finger];
  size_t link_index = 0;
  while (fc.link_ids[link_index] != link) ++link_index;
  size_t njoints = link_index + 2;  // joints preceding the link along the chain

  // per-joint sample values: pinned -> single value, free -> uniform grid
  std::vector<std::vector<double>> values(njoints);
  for (size_t ji = 0; ji < njoints; ++ji) {
    const Joint& j = model.joint(fc.joint_ids[ji]);
    auto it = pinned.find(j.id);
    if (it != pinned.end()) {
      values[ji] = {it->second};
    } else {
      if (grid < 2) throw OutOfBounds("grid must be at least 2 samples per free joint");
      for (int g = 0; g < grid; ++g)
        values[ji].push_back(j.lower + (j.upper - j.lower) * g / (grid - 1));
    }
  }

  std::vector<Eigen::Vector3d> points;
  std::vector<double> chain_angles(fc.joint_ids.size(), 0.0);
  std::vector<size_t> idx(njoints, 0);
  double len = l.axial_length();
  while (true) {
    for (size_t ji = 0; ji < njoints; ++ji) chain_angles[ji] = values[ji][idx[ji]];
    Eigen::Isometry3d t = chain_transform(model, fc, link_index, chain_angles);
    points.push_back(t.translation());                       // link base joint
    points.push_back(t * Eigen::Vector3d(len, 0, 0));        // link end joint
    size_t k = 0;
    while (k < njoints && ++idx[k] == values[k].size()) idx[k++] = 0;
    if (k == njoints) break;
  }
  out.sample_count = static_cast<int>(points.size());
  out.hull = convex_hull(points);
  return out;
}

std::vector<OppositionSpace> build_opposition_set(const std::vector<ReachableSpace>& spaces) {
  if (spaces.size() < 2) throw OutOfBounds("need at least two reachable spaces");
  std::vector<OppositionSpace> out;
  for (size_t i = 0; i < spaces.size(); ++i)
    for (size_t j = i + 1; j < spaces.size(); ++j) {
      auto [mn, mx] = hull_pair_extremal_distances(spaces[i].hull, spaces[j].hull);
      out.push_back({spaces[i].link, spaces[j].link, mn, mx});
    }
  return out;
}

SelfCollisionMap build_self_collision_map(const HandModel& model,
                                          const std::vector<ReachableSpace>& spaces) {
  SelfCollisionMap map;
  for (size_t i = 0; i < spaces.size(); ++i)
    for (size_t j = i + 1; j < spaces.size(); ++j) {
      const Link& li = model.link(spaces[i].link);
      const Link& lj = model.link(spaces[j].link);
      // adjacent links of one finger share a joint; separation there is a
      // matter of joint limits, not Cartesian clearance
      int fi = model.finger_of_link(li.id), fj = model.finger_of_link(lj.id);
      if (fi == fj && fi >= 0 && std::abs(li.id - lj.id) == 1) continue;

      double mn = convex_sets_min_distance(spaces[i].hull.vertices, spaces[j].hull.vertices);
      double threshold;
      if (li.is_palm() || lj.is_palm()) {
        threshold = (li.is_palm() ? lj : li).surface_radius();
      } else {
        threshold = li.surface_radius() + lj.surface_radius();
      }
      double depth = threshold - mn;
      if (depth > 0) map.entries[std::minmax(li.id, lj.id)] = depth;
    }
  return map;
}

ReachabilityMap build_reachability_map(const HandModel& model, const PinnedJoints& pinned,
                                       int grid) {
  ReachabilityMap map;
  map.joint_grid = grid;
  map.spaces.reserve(model.links.size());
  for (const Link& l : model.links)
    map.spaces.push_back(build_reachable_space(model, pinned, l.id, grid));
  map.os_set = build_opposition_set(map.spaces);
  map.collision_map = build_self_collision_map(model, map.spaces);
  return map;
}

std::vector<OppositionSpace> select_os_candidates(const std::vector<OppositionSpace>& os_set,
                                                  double grasp_distance, int batch,
                                                  const std::set<LinkPair>& consumed) {
  if (batch < 1) throw OutOfBounds("candidate batch must be at least 1");
  std::vector<OppositionSpace> permissive;
  for (const OppositionSpace& os : os_set) {
    if (consumed.count(std::minmax(os.link_i, os.link_j))) continue;
    if (is_geometrically_permissive(os, grasp_distance)) permissive.push_back(os);
  }
  if (permissive.empty())
    throw NoPermissiveOS("no opposition space admits grasp distance " + fmt(grasp_distance));
  std::sort(permissive.begin(), permissive.end(),
            [](const OppositionSpace& a, const OppositionSpace& b) {
              if (a.cap_max != b.cap_max) return a.cap_max < b.cap_max;
              if (a.link_i != b.link_i) return a.link_i < b.link_i;
              return a.link_j < b.link_j;
            });
  if (static_cast<int>(permissive.size()) > batch) permissive.resize(batch);
  return permissive;
}

OppositionSpace select_random_permissive(const std::vector<OppositionSpace>& os_set,
                                         double grasp_distance, Rng& rng,
                                         const std::set<LinkPair>& consumed) {
  std::vector<OppositionSpace> permissive;
  for (const OppositionSpace& os : os_set) {
    if (consumed.count(std::minmax(os.link_i, os.link_j))) continue;
    if (is_geometrically_permissive(os, grasp_distance)) permissive.push_back(os);
  }
  if (permissive.empty())
    throw NoPermissiveOS("no opposition space admits grasp distance " + fmt(grasp_distance));
  return permissive[rng.below(permissive.size())];
}

void export_capacity_csv(const ReachabilityMap& map, const HandModel& model,
                         const std::string& path) {
  std::ofstream out(path);
  out << "link_i,link_j,cap_min,cap_max\n";
  for (const OppositionSpace& os : map.os_set)
    out << model.link(os.link_i).name << "," << model.link(os.link_j).name << ","
        << fmt(os.cap_min) << "," << fmt(os.cap_max) << "\n";
}

void export_collision_csv(const SelfCollisionMap& map, const HandModel& model,
                          const std::string& path) {
  std::ofstream out(path);
  out << "link_i,link_j,depth\n";
  for (const auto& [pair, depth] : map.entries)
    out << model.link(pair.first).name << "," << model.link(pair.second).name << ","
        << fmt(depth) << "\n";
}

void export_reachable_meshes(const ReachabilityMap& map, const HandModel& model,
                             const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const ReachableSpace& rs : map.spaces)
    export_hull_obj(rs.hull, dir + "/reach_" + model.link(rs.link).name + ".obj");
}

}  // namespace handspan
