#include <doctest.h>

#include <cstdlib>
#include <string>

#include "handspan/reachability.hpp"

#include "oracles.hpp"

using namespace handspan;
using Eigen::Vector3d;

namespace {

std::string models_dir() {
  const char* env = std::getenv("HANDSPAN_MODELS");
  return env ? env : "models";
}

const HandModel& human() {
  static HandModel m = load_hand_model(models_dir() + "/human_20dof.json");
  return m;
}

const ReachabilityMap& human_map() {
  static ReachabilityMap map = build_reachability_map(human(), {}, 7);
  return map;
}

const OppositionSpace& find_os(const ReachabilityMap& map, int a, int b) {
  auto [i, j] = std::minmax(a, b);
  for (const OppositionSpace& os : map.os_set)
    if (os.link_i == i && os.link_j == j) return os;
  throw std::runtime_error("os pair missing");
}

}  // namespace

TEST_CASE("palm reachable space is the fixed inner-surface rectangle") {
  ReachableSpace rs = build_reachable_space(human(), {}, human().palm_link, 7);
  CHECK(rs.hull.degenerate);
  CHECK(rs.hull.vertices.size() == 4);
  // rectangle dimensions: 120 x 58 at z = +half thickness
  CHECK(rs.hull.aabb.hi.x() - rs.hull.aabb.lo.x() == doctest::Approx(120.0));
  CHECK(rs.hull.aabb.hi.y() - rs.hull.aabb.lo.y() == doctest::Approx(58.0));
  for (const Vector3d& v : rs.hull.vertices) CHECK(v.z() == doctest::Approx(5.0));
  // and it is independent of pinning any finger joint
  ReachableSpace rs2 = build_reachable_space(human(), {{0, 0.3}}, human().palm_link, 7);
  CHECK(rs2.hull.vertices.size() == rs.hull.vertices.size());
}

TEST_CASE("distal-link hull encloses the factorial endpoint samples and converges") {
  int lid = human().link_id("F2L4");
  ReachableSpace coarse = build_reachable_space(human(), {}, lid, 9);
  CHECK(coarse.sample_count == 2 * 9 * 9 * 9 * 9);
  ReachableSpace fine = build_reachable_space(human(), {}, lid, 17);
  double vc = coarse.hull.volume(), vf = fine.hull.volume();
  CHECK(vf >= vc - 1e-9);  // denser sampling can only add extreme points
  CHECK((vf - vc) / vf < 0.05);
}

TEST_CASE("fully pinned link degenerates to its posed segment") {
  const HandModel& m = human();
  int lid = m.link_id("F2L4");
  PinnedJoints pinned;
  for (int j : m.active_joints(lid)) pinned[j] = 0.0;
  ReachableSpace rs = build_reachable_space(m, pinned, lid, 7);
  CHECK(rs.hull.degenerate);
  REQUIRE(rs.hull.vertices.size() == 2);
  // straight finger: the segment spans the distal link along +x
  CHECK((rs.hull.vertices[0] - rs.hull.vertices[1]).norm() ==
        doctest::Approx(m.link(lid).axial_length()));
}

TEST_CASE("opposition set covers all unordered pairs without the diagonal") {
  const ReachabilityMap& map = human_map();
  size_t n = map.spaces.size();
  CHECK(map.os_set.size() == n * (n - 1) / 2);
  for (const OppositionSpace& os : map.os_set) {
    CHECK(os.link_i < os.link_j);  // no (i, i) entries
    CHECK(os.cap_min >= 0);
    CHECK(os.cap_min <= os.cap_max);
  }
}

TEST_CASE("overlapping reachable spaces have zero minimum capacity") {
  // thumb tip and index tip workspaces interpenetrate on this hand
  const OppositionSpace& os =
      find_os(human_map(), human().link_id("F1L4"), human().link_id("F2L4"));
  CHECK(os.cap_min == doctest::Approx(0.0));
  CHECK(os.cap_max > 100.0);
}

TEST_CASE("capacity bounds match independent brute force") {
  const ReachabilityMap& map = human_map();
  int checked = 0;
  for (const OppositionSpace& os : map.os_set) {
    const ConvexHull3& a = map.spaces[os.link_i].hull;
    const ConvexHull3& b = map.spaces[os.link_j].hull;
    // max capacity: brute force over vertex pairs is exact by convexity
    double mx = 0;
    for (const auto& va : a.vertices)
      for (const auto& vb : b.vertices) mx = std::max(mx, (va - vb).norm());
    CHECK(os.cap_max == doctest::Approx(mx).epsilon(1e-9));
    // min capacity: exact boundary-feature enumeration (disjoint solid hulls)
    if (os.cap_min > 1e-9 && !a.degenerate && !b.degenerate && checked < 5) {
      CHECK(os.cap_min == doctest::Approx(oracles::feature_min_distance(a, b)).epsilon(1e-6));
      ++checked;
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("permissiveness test is an inclusive capacity-interval check") {
  OppositionSpace os{1, 2, 10.0, 30.0};
  CHECK(is_geometrically_permissive(os, 10.0));  // lower boundary inclusive
  CHECK(is_geometrically_permissive(os, 30.0));
  CHECK(is_geometrically_permissive(os, 20.0));
  CHECK_FALSE(is_geometrically_permissive(os, 30.0001));
  CHECK_FALSE(is_geometrically_permissive(os, 9.9999));
}

TEST_CASE("human hand is permissive for a 10mm sphere at mu=0.5, incl. fingertip pairs") {
  ObjectModel sphere = ObjectModel::sphere("s10", 10.0);
  double d = min_grasp_distance(sphere, 0.5);
  CHECK(d == doctest::Approx(17.8885).epsilon(1e-4));
  const ReachabilityMap& map = human_map();
  int permissive = 0;
  for (const OppositionSpace& os : map.os_set)
    if (is_geometrically_permissive(os, d)) ++permissive;
  CHECK(permissive > 0);
  CHECK(is_geometrically_permissive(
      find_os(map, human().link_id("F1L4"), human().link_id("F2L4")), d));
  CHECK(is_geometrically_permissive(
      find_os(map, human().link_id("F3L4"), human().link_id("F4L4")), d));
}

TEST_CASE("minimum grasp distance closed form") {
  CHECK(min_grasp_distance(ObjectModel::sphere("s", 10), 0.0) == doctest::Approx(20.0));
  CHECK(min_grasp_distance(ObjectModel::sphere("s", 10), 0.5) ==
        doctest::Approx(17.8885).epsilon(1e-5));
  CHECK(min_grasp_distance(ObjectModel::cylinder("c", 27.5, 175), 0.5) ==
        doctest::Approx(49.193).epsilon(1e-4));
}

TEST_CASE("closed form matches brute-force antipodal search on the sphere") {
  // two contacts at center angle theta: both friction cones admit the chord
  // iff the chord-to-normal angle (pi - theta)/2 is within arctan(mu);
  // scan theta for the closest admissible pair
  double r = 10.0, mu = 0.5;
  double best = 1e300;
  for (int k = 0; k <= 180000; ++k) {
    double theta = kPi * k / 180000.0;
    if ((kPi - theta) / 2.0 <= std::atan(mu) + 1e-12)
      best = std::min(best, 2 * r * std::sin(theta / 2));
  }
  CHECK(best == doctest::Approx(min_grasp_distance(ObjectModel::sphere("s", r), mu))
                    .epsilon(1e-6));
}

TEST_CASE("composite without designated contact part is rejected") {
  ObjectModel m;
  m.id = "twoPartNoContact";
  m.parts.push_back({SphereShape{17}, Eigen::Isometry3d::Identity()});
  Eigen::Isometry3d off = Eigen::Isometry3d::Identity();
  off.translation() = Vector3d(52, 0, 0);
  m.parts.push_back({SphereShape{30}, off});
  CHECK_THROWS_AS(min_grasp_distance(m, 0.5), UnsupportedShape);
  m.contact_part = 0;
  CHECK(min_grasp_distance(m, 0.5) == doctest::Approx(2 * 17 * std::cos(std::atan(0.5))));
}

TEST_CASE("self-collision map respects the depth upper bound and symmetry") {
  const HandModel& m = human();
  const SelfCollisionMap& map = human_map().collision_map;
  CHECK_FALSE(map.entries.empty());
  for (const auto& [pair, depth] : map.entries) {
    CHECK(depth > 0);  // only positive depths stored
    const Link& a = m.link(pair.first);
    const Link& b = m.link(pair.second);
    double bound = (a.is_palm() || b.is_palm()) ? (a.is_palm() ? b : a).surface_radius()
                                                : a.surface_radius() + b.surface_radius();
    CHECK(depth <= bound + 1e-9);
    CHECK(map.depth(pair.first, pair.second) == map.depth(pair.second, pair.first));
  }
}

TEST_CASE("far-apart link pairs have no collision entry") {
  const HandModel& m = human();
  const SelfCollisionMap& map = human_map().collision_map;
  // index proximal phalanx never reaches over the palm surface
  CHECK_FALSE(map.colliding(m.link_id("F2L2"), m.palm_link));
  CHECK(map.depth(m.link_id("F2L2"), m.palm_link) == 0.0);
}

TEST_CASE("pinning a joint never enlarges a reachable hull") {
  const HandModel& m = human();
  int lid = m.link_id("F3L4");
  ReachableSpace free = build_reachable_space(m, {}, lid, 7);
  auto joints = m.active_joints(lid);
  // pin the proximal flexion joint at one of its grid nodes
  const Joint& j = m.joint(joints[1]);
  double node = j.lower + (j.upper - j.lower) * 2.0 / 6.0;
  ReachableSpace pinned = build_reachable_space(m, {{j.id, node}}, lid, 7);
  for (const Vector3d& v : pinned.hull.vertices)
    CHECK(hull_signed_distance(free.hull, v) <= 1e-6);
}

TEST_CASE("candidate selection is ascending in max capacity with stable ties") {
  std::vector<OppositionSpace> set = {
      {1, 2, 0.0, 50.0}, {1, 3, 0.0, 30.0}, {2, 3, 5.0, 30.0}, {1, 4, 0.0, 80.0},
      {2, 4, 25.0, 90.0},  // not permissive at d=20
  };
  auto picked = select_os_candidates(set, 20.0, 3);
  REQUIRE(picked.size() == 3);
  CHECK(picked[0].link_i == 1);  // cap_max 30 tie broken by lower link pair
  CHECK(picked[0].link_j == 3);
  CHECK(picked[1].link_i == 2);
  CHECK(picked[1].link_j == 3);
  CHECK(picked[2].cap_max == 50.0);

  SUBCASE("consumed pairs are excluded") {
    auto rest = select_os_candidates(set, 20.0, 3, {{1, 3}});
    CHECK(rest[0].link_i == 2);
    CHECK(rest[0].link_j == 3);
  }
  SUBCASE("no permissive candidates throws") {
    CHECK_THROWS_AS(select_os_candidates(set, 500.0, 3), NoPermissiveOS);
  }
  SUBCASE("random selection draws from the permissive set only") {
    Rng rng(42);
    for (int k = 0; k < 20; ++k) {
      OppositionSpace os = select_random_permissive(set, 20.0, rng);
      CHECK(is_geometrically_permissive(os, 20.0));
    }
    CHECK_THROWS_AS(select_random_permissive(set, 500.0, rng), NoPermissiveOS);
  }
}

TEST_CASE("batch of three candidates as configured by default") {
  const ReachabilityMap& map = human_map();
  auto picked = select_os_candidates(map.os_set, 17.8885, 3);
  CHECK(picked.size() == 3);
  for (size_t i = 1; i < picked.size(); ++i) CHECK(picked[i - 1].cap_max <= picked[i].cap_max);
}
