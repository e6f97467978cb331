#include "handspan/hull.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <unordered_map>

namespace handspan {

namespace {

struct Face {
  int a, b, c;
  Eigen::Vector3d n;  // unit outward normal
  double d;           // plane offset, n.p = d on the plane
  bool alive = true;
};

double plane_eval(const Face& f, const Eigen::Vector3d& p) { return f.n.dot(p) - f.d; }

Face make_face(const std::vector<Eigen::Vector3d>& pts, int a, int b, int c,
               const Eigen::Vector3d& interior) {
  Face f{a, b, c, {}, 0.0};
  Eigen::Vector3d n = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
  double len = n.norm();
  if (len > 0) n /= len;
  f.n = n;
  f.d = n.dot(pts[a]);
  if (plane_eval(f, interior) > 0) {  // flip to keep the interior below
    std::swap(f.b, f.c);
    f.n = -f.n;
    f.d = -f.d;
  }
  return f;
}

// 2-D monotone chain on points projected into the plane spanned by (u, v).
std::vector<int> planar_hull_indices(const std::vector<Eigen::Vector3d>& pts,
                                     const Eigen::Vector3d& origin, const Eigen::Vector3d& u,
                                     const Eigen::Vector3d& v) {
  std::vector<int> order(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) order[i] = static_cast<int>(i);
  auto px = [&](int i) { return u.dot(pts[i] - origin); };
  auto py = [&](int i) { return v.dot(pts[i] - origin); };
  std::sort(order.begin(), order.end(), [&](int i, int j) {
    return px(i) < px(j) || (px(i) == px(j) && py(i) < py(j));
  });
  order.erase(std::unique(order.begin(), order.end(),
                          [&](int i, int j) {
                            return std::abs(px(i) - px(j)) < 1e-12 &&
                                   std::abs(py(i) - py(j)) < 1e-12;
                          }),
              order.end());
  auto cross2 = [&](int o, int i, int j) {
    return (px(i) - px(o)) * (py(j) - py(o)) - (py(i) - py(o)) * (px(j) - px(o));
  };
  if (order.size() < 3) return order;
  std::vector<int> hull;
  for (int pass = 0; pass < 2; ++pass) {
    size_t start = hull.size();
    for (int idx : order) {
      while (hull.size() >= start + 2 &&
             cross2(hull[hull.size() - 2], hull[hull.size() - 1], idx) <= 0)
        hull.pop_back();
      hull.push_back(idx);
    }
    hull.pop_back();
    std::reverse(order.begin(), order.end());
  }
  return hull;
}

ConvexHull3 finalize(const std::vector<Eigen::Vector3d>& pts, std::vector<Face>& faces) {
  ConvexHull3 hull;
  std::vector<int> remap(pts.size(), -1);
  for (const Face& f : faces) {
    if (!f.alive) continue;
    for (int idx : {f.a, f.b, f.c}) {
      if (remap[idx] < 0) {
        remap[idx] = static_cast<int>(hull.vertices.size());
        hull.vertices.push_back(pts[idx]);
        hull.aabb.grow(pts[idx]);
      }
    }
    hull.faces.push_back({remap[f.a], remap[f.b], remap[f.c]});
  }
  return hull;
}

}  // namespace

ConvexHull3 convex_hull(std::span<const Eigen::Vector3d> points) {
  // de-duplicate coincident points first; grid sampling produces many
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(points.size());
  {
    std::unordered_map<std::int64_t, std::vector<int>> seen;
    for (const auto& p : points) {
      const double q = 1e6;
      std::int64_t key = static_cast<std::int64_t>(std::llround(p.x() * q)) * 73856093ll ^
                         static_cast<std::int64_t>(std::llround(p.y() * q)) * 19349663ll ^
                         static_cast<std::int64_t>(std::llround(p.z() * q)) * 83492791ll;
      auto& bucket = seen[key];
      bool dup = false;
      for (int i : bucket)
        if ((pts[i] - p).squaredNorm() < 1e-18) {
          dup = true;
          break;
        }
      if (!dup) {
        bucket.push_back(static_cast<int>(pts.size()));
        pts.push_back(p);
      }
    }
  }

  ConvexHull3 out;
  if (pts.empty()) return out;

  double scale = 0;
  Aabb box;
  for (const auto& p : pts) box.grow(p);
  scale = (box.hi - box.lo).norm();
  const double eps = std::max(1e-9 * std::max(scale, 1.0), 1e-12);

  // initial extreme pair
  int i0 = 0, i1 = 0;
  {
    int axis;
    (box.hi - box.lo).maxCoeff(&axis);
    for (size_t i = 0; i < pts.size(); ++i) {
      if (pts[i][axis] < pts[i0][axis]) i0 = static_cast<int>(i);
      if (pts[i][axis] > pts[i1][axis]) i1 = static_cast<int>(i);
    }
  }
  if ((pts[i1] - pts[i0]).norm() < eps) {  // single point
    out.vertices = {pts[i0]};
    out.aabb.grow(pts[i0]);
    out.degenerate = true;
    return out;
  }

  // farthest from the line i0-i1
  int i2 = -1;
  {
    double best = eps;
    const Eigen::Vector3d dir = (pts[i1] - pts[i0]).normalized();
    for (size_t i = 0; i < pts.size(); ++i) {
      Eigen::Vector3d r = pts[i] - pts[i0];
      double d = (r - dir * dir.dot(r)).norm();
      if (d > best) {
        best = d;
        i2 = static_cast<int>(i);
      }
    }
  }
  if (i2 < 0) {  // collinear: keep the two extremes
    const Eigen::Vector3d dir = (pts[i1] - pts[i0]).normalized();
    int lo = i0, hi = i1;
    for (size_t i = 0; i < pts.size(); ++i) {
      double t = dir.dot(pts[i] - pts[i0]);
      if (t < dir.dot(pts[lo] - pts[i0])) lo = static_cast<int>(i);
      if (t > dir.dot(pts[hi] - pts[i0])) hi = static_cast<int>(i);
    }
    out.vertices = {pts[lo], pts[hi]};
    for (const auto& v : out.vertices) out.aabb.grow(v);
    out.degenerate = true;
    return out;
  }

  // farthest from the plane (i0, i1, i2)
  int i3 = -1;
  const Eigen::Vector3d pn =
      ((pts[i1] - pts[i0]).cross(pts[i2] - pts[i0])).normalized();
  {
    double best = eps;
    for (size_t i = 0; i < pts.size(); ++i) {
      double d = std::abs(pn.dot(pts[i] - pts[i0]));
      if (d > best) {
        best = d;
        i3 = static_cast<int>(i);
      }
    }
  }
  if (i3 < 0) {  // coplanar: planar convex polygon
    Eigen::Vector3d u = (pts[i1] - pts[i0]).normalized();
    Eigen::Vector3d v = pn.cross(u);
    std::vector<int> ring = planar_hull_indices(pts, pts[i0], u, v);
    for (int idx : ring) {
      out.vertices.push_back(pts[idx]);
      out.aabb.grow(pts[idx]);
    }
    // double-sided fan, for export only
    for (size_t k = 1; k + 1 < out.vertices.size(); ++k) {
      out.faces.push_back({0, static_cast<int>(k), static_cast<int>(k + 1)});
      out.faces.push_back({0, static_cast<int>(k + 1), static_cast<int>(k)});
    }
    out.degenerate = true;
    return out;
  }

  const Eigen::Vector3d interior = (pts[i0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
  std::vector<Face> faces;
  faces.push_back(make_face(pts, i0, i1, i2, interior));
  faces.push_back(make_face(pts, i0, i1, i3, interior));
  faces.push_back(make_face(pts, i0, i2, i3, interior));
  faces.push_back(make_face(pts, i1, i2, i3, interior));

  for (size_t pi = 0; pi < pts.size(); ++pi) {
    int p = static_cast<int>(pi);
    if (p == i0 || p == i1 || p == i2 || p == i3) continue;
    // visible faces
    std::vector<int> visible;
    for (size_t fi = 0; fi < faces.size(); ++fi)
      if (faces[fi].alive && plane_eval(faces[fi], pts[p]) > eps)
        visible.push_back(static_cast<int>(fi));
    if (visible.empty()) continue;

    // horizon = directed edges of visible faces whose reverse is not visible
    std::unordered_map<std::int64_t, int> edge_count;  // encoded directed edge
    auto enc = [&](int a, int b) {
      return (static_cast<std::int64_t>(a) << 32) | static_cast<std::uint32_t>(b);
    };
    for (int fi : visible) {
      const Face& f = faces[fi];
      for (auto [a, b] : {std::pair{f.a, f.b}, std::pair{f.b, f.c}, std::pair{f.c, f.a}})
        edge_count[enc(a, b)]++;
      faces[fi].alive = false;
    }
    for (auto& [key, cnt] : edge_count) {
      int a = static_cast<int>(key >> 32);
      int b = static_cast<int>(key & 0xffffffff);
      if (edge_count.count(enc(b, a))) continue;  // interior edge of the visible patch
      faces.push_back(make_face(pts, a, b, p, interior));
    }
  }

  out = finalize(pts, faces);
  return out;
}

double ConvexHull3::volume() const {
  if (degenerate || vertices.empty() || faces.empty()) return 0.0;
  const Eigen::Vector3d c = centroid();
  double vol = 0;
  for (const auto& f : faces) {
    vol += (vertices[f[0]] - c).dot((vertices[f[1]] - c).cross(vertices[f[2]] - c)) / 6.0;
  }
  return std::abs(vol);
}

Eigen::Vector3d ConvexHull3::centroid() const {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& v : vertices) c += v;
  return vertices.empty() ? c : Eigen::Vector3d(c / double(vertices.size()));
}

double hull_signed_distance(const ConvexHull3& hull, const Eigen::Vector3d& p) {
  if (hull.degenerate || hull.faces.empty()) return point_set_distance(hull.vertices, p);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& f : hull.faces) {
    const Eigen::Vector3d& a = hull.vertices[f[0]];
    Eigen::Vector3d n = (hull.vertices[f[1]] - a).cross(hull.vertices[f[2]] - a);
    double len = n.norm();
    if (len < 1e-14) continue;
    best = std::max(best, n.dot(p - a) / len);
  }
  return best;
}

namespace {

// closest point to the origin on a simplex of up to 4 points; reduces the
// simplex to the supporting feature in place
Eigen::Vector3d simplex_closest(std::vector<Eigen::Vector3d>& w) {
  auto seg = [](const Eigen::Vector3d& a, const Eigen::Vector3d& b, double& t) {
    Eigen::Vector3d ab = b - a;
    double den = ab.squaredNorm();
    t = den > 0 ? std::clamp(-a.dot(ab) / den, 0.0, 1.0) : 0.0;
    return Eigen::Vector3d(a + t * ab);
  };
  if (w.size() == 1) return w[0];
  if (w.size() == 2) {
    double t;
    Eigen::Vector3d c = seg(w[0], w[1], t);
    if (t <= 0) w = {w[0]};
    else if (t >= 1) w = {w[1]};
    return c;
  }
  auto tri = [&](const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& c,
                 int keep[3], int& nkeep) {
    // Ericson-style voronoi region classification for the origin
    Eigen::Vector3d ab = b - a, ac = c - a, ap = -a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0 && d2 <= 0) { nkeep = 1; keep[0] = 0; return a; }
    Eigen::Vector3d bp = -b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0 && d4 <= d3) { nkeep = 1; keep[0] = 1; return b; }
    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) {
      double t = d1 / (d1 - d3);
      nkeep = 2; keep[0] = 0; keep[1] = 1;
      return Eigen::Vector3d(a + t * ab);
    }
    Eigen::Vector3d cp = -c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0 && d5 <= d6) { nkeep = 1; keep[0] = 2; return c; }
    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) {
      double t = d2 / (d2 - d6);
      nkeep = 2; keep[0] = 0; keep[1] = 2;
      return Eigen::Vector3d(a + t * ac);
    }
    double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
      double t = (d4 - d3) / ((d4 - d3) + (d5 - d6));
      nkeep = 2; keep[0] = 1; keep[1] = 2;
      return Eigen::Vector3d(b + t * (c - b));
    }
    double denom = 1.0 / (va + vb + vc);
    nkeep = 3; keep[0] = 0; keep[1] = 1; keep[2] = 2;
    return Eigen::Vector3d(a + (vb * denom) * ab + (vc * denom) * ac);
  };
  if (w.size() == 3) {
    int keep[3], nk;
    Eigen::Vector3d c = tri(w[0], w[1], w[2], keep, nk);
    std::vector<Eigen::Vector3d> nw;
    for (int i = 0; i < nk; ++i) nw.push_back(w[keep[i]]);
    w = nw;
    return c;
  }
  // tetrahedron: test each face the origin is strictly outside of; a
  // near-flat tetra cannot enclose the origin, so fall back to checking all
  // faces instead of declaring containment
  const int facev[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  double scale = 0;
  for (const auto& p : w) scale = std::max(scale, p.squaredNorm());
  double vol = std::abs((w[1] - w[0]).cross(w[2] - w[0]).dot(w[3] - w[0]));
  bool flat = vol <= 1e-12 * std::pow(std::max(scale, 1e-300), 1.5);

  double bestd = std::numeric_limits<double>::infinity();
  Eigen::Vector3d bestc = Eigen::Vector3d::Zero();
  std::vector<Eigen::Vector3d> bestw;
  bool inside = !flat;
  for (int fi = 0; fi < 4; ++fi) {
    const Eigen::Vector3d &a = w[facev[fi][0]], &b = w[facev[fi][1]], &c = w[facev[fi][2]];
    const Eigen::Vector3d& other = w[6 - facev[fi][0] - facev[fi][1] - facev[fi][2]];
    Eigen::Vector3d n = (b - a).cross(c - a);
    double side_o = n.dot(-a), side_d = n.dot(other - a);
    if (!flat && side_o * side_d >= 0) continue;  // origin on the interior side
    inside = false;
    int keep[3], nk;
    Eigen::Vector3d cc = tri(a, b, c, keep, nk);
    double d = cc.squaredNorm();
    if (d < bestd) {
      bestd = d;
      bestc = cc;
      bestw.clear();
      const Eigen::Vector3d* fv[3] = {&a, &b, &c};
      for (int i = 0; i < nk; ++i) bestw.push_back(*fv[keep[i]]);
    }
  }
  if (inside) return Eigen::Vector3d::Zero();  // origin enclosed
  w = bestw;
  return bestc;
}

int support_index(std::span<const Eigen::Vector3d> verts, const Eigen::Vector3d& dir) {
  int best = 0;
  double bd = verts[0].dot(dir);
  for (size_t i = 1; i < verts.size(); ++i) {
    double d = verts[i].dot(dir);
    if (d > bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

double convex_sets_min_distance(std::span<const Eigen::Vector3d> a,
                                std::span<const Eigen::Vector3d> b) {
  if (a.empty() || b.empty()) return 0.0;
  std::vector<Eigen::Vector3d> simplex;
  Eigen::Vector3d v = a[0] - b[0];
  for (int iter = 0; iter < 256; ++iter) {
    double vn = v.norm();
    if (vn < 1e-12) return 0.0;
    Eigen::Vector3d w = a[support_index(a, -v)] - b[support_index(b, v)];
    // no progress toward the origin
    if (vn * vn - v.dot(w) <= 1e-12 * std::max(1.0, vn * vn)) return vn;
    // a repeated support point cannot improve the simplex
    bool dup = false;
    for (const auto& s : simplex) dup = dup || (s - w).squaredNorm() <= 1e-24;
    if (dup) return vn;
    simplex.push_back(w);
    v = simplex_closest(simplex);
    if (simplex.size() == 4 && v.norm() < 1e-12) return 0.0;
  }
  return v.norm();
}

double point_set_distance(std::span<const Eigen::Vector3d> verts, const Eigen::Vector3d& p) {
  std::vector<Eigen::Vector3d> single{p};
  return convex_sets_min_distance(verts, single);
}

std::pair<double, double> hull_pair_extremal_distances(const ConvexHull3& a,
                                                       const ConvexHull3& b) {
  double dmin = convex_sets_min_distance(a.vertices, b.vertices);
  double dmax2 = 0;
  for (const auto& va : a.vertices)
    for (const auto& vb : b.vertices) dmax2 = std::max(dmax2, (va - vb).squaredNorm());
  return {dmin, std::sqrt(dmax2)};
}

void export_hull_obj(const ConvexHull3& hull, const std::string& path) {
  std::ofstream out(path);
  out << "# handspan convex hull export\n";
  for (const auto& v : hull.vertices)
    out << "v " << v.x() << " " << v.y() << " " << v.z() << "\n";
  for (const auto& f : hull.faces)
    out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
}

}  // namespace handspan
