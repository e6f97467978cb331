#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "handspan/hand.hpp"
#include "handspan/hull.hpp"
#include "handspan/object.hpp"
#include "handspan/rng.hpp"

namespace handspan {

struct ReachableSpace {
  int link = -1;
  ConvexHull3 hull;        // in {H}
  int sample_count = 0;
  int joint_grid = 0;      // samples per free joint
};

struct OppositionSpace {
  int link_i = -1, link_j = -1;  // ordered: link_i < link_j
  double cap_min = 0, cap_max = 0;
};

inline bool is_geometrically_permissive(const OppositionSpace& os, double d) {
  return os.cap_min <= d && d <= os.cap_max;
}

struct SelfCollisionMap {
  // only positive depths stored, keyed by ordered (min, max) link pair
  std::map<std::pair<int, int>, double> entries;

  double depth(int i, int j) const {
    auto it = entries.find(std::minmax(i, j));
    return it == entries.end() ? 0.0 : it->second;
  }
  bool colliding(int i, int j) const { return entries.count(std::minmax(i, j)) > 0; }
};

struct ReachabilityMap {
  std::vector<ReachableSpace> spaces;  // indexed by link id
  std::vector<OppositionSpace> os_set;
  SelfCollisionMap collision_map;
  int joint_grid = 0;
};

using PinnedJoints = std::map<int, double>;  // joint id -> pinned angle

// Hull of the link's two endpoint (joint) positions over the factorial grid
// of its free active joints; pinned joints contribute a single value. The
// palm yields its fixed inner-surface rectangle.
ReachableSpace build_reachable_space(const HandModel& model, const PinnedJoints& pinned,
                                     int link, int grid);

std::vector<OppositionSpace> build_opposition_set(const std::vector<ReachableSpace>& spaces);

// Potential interpenetration per link pair: max(r_i + r_j - min_distance, 0)
// for finger pairs; palm pairs use the link radius against the inner-surface
// rectangle (half-thickness projection). Adjacent links of one finger share a
// joint and are excluded (their separation is governed by joint limits).
SelfCollisionMap build_self_collision_map(const HandModel& model,
                                          const std::vector<ReachableSpace>& spaces);

ReachabilityMap build_reachability_map(const HandModel& model, const PinnedJoints& pinned,
                                       int grid);

using LinkPair = std::pair<int, int>;

// Permissive OSes for the object's min grasp distance, ascending by cap_max
// (ties: lower link-id pair), first `batch` returned; consumed pairs skipped.
std::vector<OppositionSpace> select_os_candidates(const std::vector<OppositionSpace>& os_set,
                                                  double grasp_distance, int batch,
                                                  const std::set<LinkPair>& consumed = {});

// One uniformly random permissive OS (the non-KE planning condition).
OppositionSpace select_random_permissive(const std::vector<OppositionSpace>& os_set,
                                         double grasp_distance, Rng& rng,
                                         const std::set<LinkPair>& consumed = {});

void export_capacity_csv(const ReachabilityMap& map, const HandModel& model,
                         const std::string& path);
void export_collision_csv(const SelfCollisionMap& map, const HandModel& model,
                          const std::string& path);
void export_reachable_meshes(const ReachabilityMap& map, const HandModel& model,
                             const std::string& dir);

}  // namespace handspan
