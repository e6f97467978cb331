#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "handspan/core.hpp"

namespace handspan {

struct Aabb {
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(1e300);
  Eigen::Vector3d hi = Eigen::Vector3d::Constant(-1e300);

  void grow(const Eigen::Vector3d& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  bool contains(const Eigen::Vector3d& p, double tol = 0.0) const {
    return (p.array() >= lo.array() - tol).all() && (p.array() <= hi.array() + tol).all();
  }
  Eigen::Vector3d center() const { return 0.5 * (lo + hi); }
};

// Convex hull of a 3-D point set. Only boundary vertices are retained.
// Coplanar/collinear input produces a flagged degenerate hull whose vertex
// set still describes the correct convex region; such hulls support distance
// queries but faces are a double-sided triangulation for export only.
struct ConvexHull3 {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;  // outward-oriented triangles
  Aabb aabb;
  bool degenerate = false;

  double volume() const;
  Eigen::Vector3d centroid() const;  // mean of vertices
};

ConvexHull3 convex_hull(std::span<const Eigen::Vector3d> points);

// Signed distance used for containment checks: max over face-plane signed
// distances (negative inside). For degenerate hulls falls back to Euclidean
// distance to the convex polygon/segment.
double hull_signed_distance(const ConvexHull3& hull, const Eigen::Vector3d& p);

// Euclidean distance from a point to the convex set spanned by `verts`
// (0 if inside). GJK on the vertex support function.
double point_set_distance(std::span<const Eigen::Vector3d> verts, const Eigen::Vector3d& p);

// Minimum Euclidean distance between the convex sets spanned by two vertex
// clouds (0 on intersection). GJK; accuracy ~1e-9 relative.
double convex_sets_min_distance(std::span<const Eigen::Vector3d> a,
                                std::span<const Eigen::Vector3d> b);

// (min, max) distances between two hulls: min via GJK, max over vertex pairs
// (attained at vertices by convexity).
std::pair<double, double> hull_pair_extremal_distances(const ConvexHull3& a,
                                                       const ConvexHull3& b);

// ASCII OBJ export (triangle mesh).
void export_hull_obj(const ConvexHull3& hull, const std::string& path);

}  // namespace handspan
