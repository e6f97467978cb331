#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <string>

#include "handspan/contact.hpp"
#include "handspan/rng.hpp"

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

ContactFrame frame_at(const Vector3d& p, const Vector3d& normal, const Vector3d& t1) {
  ContactFrame f;
  f.p = V3<double>::from(p);
  f.normal = V3<double>::from(normal.normalized());
  f.t1 = V3<double>::from(t1.normalized());
  f.t2 = f.normal.cross(f.t1);
  return f;
}

// two contacts on a sphere of radius r at center angle theta (in the xy
// plane, symmetric about x), inward normals, in-plane tangent t1
std::vector<ContactFrame> sphere_pair(const Vector3d& o, double r, double theta) {
  std::vector<ContactFrame> frames;
  for (double sign : {1.0, -1.0}) {
    double beta = sign * theta / 2.0;
    Vector3d out(std::cos(beta), std::sin(beta), 0);
    Vector3d tangent(-std::sin(beta), std::cos(beta), 0);
    frames.push_back(frame_at(o + r * out, -out, tangent));
  }
  return frames;
}

bool closure_of(const std::vector<ContactFrame>& frames, const Vector3d& o, double mu,
                int n_edges) {
  std::vector<FrictionCone> cones;
  for (const auto& f : frames) cones.push_back(friction_cone(mu, n_edges, f));
  return force_closure_feasible(primitive_wrenches(frames, o, cones)).feasible;
}

}  // namespace

TEST_CASE("contact frames on a cylinder link") {
  const HandModel& m = human();
  JointConfiguration q = m.rest_configuration();
  int lid = m.link_id("F2L2");
  Eigen::Isometry3d base = m.forward_kinematics(q, lid);

  SUBCASE("alpha=0, phi=0 lies on the base circle in the reference direction") {
    ContactFrame f = contact_position(m, q, {lid, 0.0, 0.0});
    Vector3d expect = base.translation() + 5.0 * (base.linear() * Vector3d::UnitZ());
    CHECK((f.p.value() - expect).norm() == doctest::Approx(0.0).epsilon(1e-12));
    CHECK((f.normal.value() - base.linear() * Vector3d::UnitZ()).norm() ==
          doctest::Approx(0.0));
  }
  SUBCASE("alpha=1 differs from alpha=0 by the link length along the axis") {
    ContactFrame f0 = contact_position(m, q, {lid, 0.0, 1.2});
    ContactFrame f1 = contact_position(m, q, {lid, 1.0, 1.2});
    Vector3d diff = f1.p.value() - f0.p.value();
    CHECK(diff.norm() == doctest::Approx(m.link(lid).axial_length()));
    CHECK((diff.normalized() - base.linear() * Vector3d::UnitX()).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("frames are right-handed orthonormal triads") {
    ContactFrame f = contact_position(m, q, {lid, 0.37, -2.1});
    CHECK(f.normal.value().norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(f.t1.value().dot(f.normal.value())) < 1e-12);
    CHECK((f.t1.value().cross(f.t2.value()) - f.normal.value()).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("out-of-range parameters are rejected") {
    CHECK_THROWS_AS(contact_position(m, q, {lid, 1.5, 0.0}), OutOfBounds);
    CHECK_THROWS_AS(contact_position(m, q, {lid, 0.5, 4.0}), OutOfBounds);
  }
}

TEST_CASE("palm contact at the origin offsets") {
  const HandModel& m = human();
  JointConfiguration q = m.rest_configuration();
  ContactParam cp;
  cp.link = m.palm_link;
  ContactFrame f = contact_position(m, q, cp);
  CHECK((f.p.value() - Vector3d(0, 0, 5)).norm() == doctest::Approx(0.0));
  CHECK((f.normal.value() - Vector3d::UnitZ()).norm() == doctest::Approx(0.0));
  cp.ux = 100.0;
  CHECK_THROWS_AS(contact_position(m, q, cp), OutOfBounds);
}

TEST_CASE("friction pyramid edge values") {
  ContactFrame f = frame_at(Vector3d::Zero(), Vector3d::UnitY(), Vector3d::UnitX());
  FrictionCone cone = friction_cone(0.5, 3, f);
  REQUIRE(cone.edges.size() == 3);
  // final edge (k = N_f) sits in the t1/normal plane: (0.5, 1, 0) normalized
  CHECK(cone.edges[2].x() == doctest::Approx(0.4472136).epsilon(1e-6));
  CHECK(cone.edges[2].y() == doctest::Approx(0.8944272).epsilon(1e-6));
  CHECK(cone.edges[2].z() == doctest::Approx(0.0));
}

TEST_CASE("zero friction collapses every edge onto the axis") {
  ContactFrame f = frame_at(Vector3d::Zero(), Vector3d(1, 2, 3), Vector3d(3, 0, -1));
  FrictionCone cone = friction_cone(0.0, 5, f);
  for (const Vector3d& e : cone.edges)
    CHECK((e - f.normal.value()).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("every edge makes angle arctan(mu) with the cone axis") {
  Rng rng(0xc0ffeeu);
  for (int trial = 0; trial < 30; ++trial) {
    double mu = rng.uniform(0.05, 1.0);
    int nf = 3 + static_cast<int>(rng.below(8));
    Vector3d n(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (n.norm() < 1e-3) continue;
    Vector3d t = n.unitOrthogonal();
    ContactFrame f = frame_at(Vector3d::Zero(), n, t);
    FrictionCone cone = friction_cone(mu, nf, f);
    for (const Vector3d& e : cone.edges) {
      CHECK(e.norm() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(std::acos(std::clamp(e.dot(f.normal.value()), -1.0, 1.0)) ==
            doctest::Approx(std::atan(mu)).epsilon(1e-9));
    }
  }
}

TEST_CASE("convex combinations of edges stay inside the exact Coulomb cone") {
  Rng rng(0x5ca1eu);
  Vector3d n(0.2, -0.4, 0.89);
  ContactFrame f = frame_at(Vector3d::Zero(), n, n.unitOrthogonal());
  double mu = 0.7;
  FrictionCone cone = friction_cone(mu, 6, f);
  for (int trial = 0; trial < 50; ++trial) {
    Vector3d combo = Vector3d::Zero();
    double total = 0;
    for (const Vector3d& e : cone.edges) {
      double w = rng.uniform();
      combo += w * e;
      total += w;
    }
    combo /= total;
    double angle = std::acos(std::clamp(combo.normalized().dot(f.normal.value()), -1.0, 1.0));
    CHECK(angle <= std::atan(mu) + 1e-9);
  }
}

TEST_CASE("wrench torque identities") {
  Vector3d o(5, -2, 7);
  SUBCASE("contact at the object center gives zero torque") {
    auto frames = std::vector<ContactFrame>{frame_at(o, Vector3d::UnitX(), Vector3d::UnitY())};
    auto ws = primitive_wrenches(frames, o, {friction_cone(0.5, 3, frames[0])});
    for (const auto& w : ws) CHECK(w.torque.norm() == doctest::Approx(0.0));
  }
  SUBCASE("force parallel to the lever arm gives zero torque") {
    auto frames =
        std::vector<ContactFrame>{frame_at(o + Vector3d(3, 0, 0), Vector3d::UnitX(), Vector3d::UnitY())};
    auto ws = primitive_wrenches(frames, o, {friction_cone(0.0, 3, frames[0])});
    for (const auto& w : ws) CHECK(w.torque.norm() == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("torque is orthogonal to lever arm and force") {
    Rng rng(0xabcu);
    for (int trial = 0; trial < 20; ++trial) {
      Vector3d p(rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9));
      Vector3d n(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      if (n.norm() < 1e-2) continue;
      auto frames = std::vector<ContactFrame>{frame_at(p, n, n.unitOrthogonal())};
      auto ws = primitive_wrenches(frames, o, {friction_cone(0.4, 4, frames[0])});
      Vector3d d = p - o;
      for (const auto& w : ws) {
        CHECK(std::abs(w.torque.dot(d)) < 1e-9 * std::max(1.0, d.squaredNorm()));
        CHECK(std::abs(w.torque.dot(w.force)) < 1e-9 * std::max(1.0, d.norm()));
      }
    }
  }
}

TEST_CASE("antipodal sphere contacts close; a single contact cannot") {
  Vector3d o(10, 20, 30);
  auto frames = sphere_pair(o, 10.0, kPi);
  std::vector<FrictionCone> cones = {friction_cone(0.5, 3, frames[0]),
                                     friction_cone(0.5, 3, frames[1])};
  auto res = force_closure_feasible(primitive_wrenches(frames, o, cones));
  CHECK(res.feasible);
  // witness validity: nonnegative, sums to one, combination is the origin
  double sum = 0;
  Eigen::Matrix<double, 6, 1> combo = Eigen::Matrix<double, 6, 1>::Zero();
  auto ws = primitive_wrenches(frames, o, cones);
  for (size_t i = 0; i < ws.size(); ++i) {
    CHECK(res.coefficients[i] >= 0);
    sum += res.coefficients[i];
    combo += res.coefficients[i] * ws[i].vec();
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(combo.norm() < 1e-8 * 10.0);

  auto single = force_closure_feasible(
      primitive_wrenches({frames[0]}, o, {friction_cone(0.5, 3, frames[0])}));
  CHECK_FALSE(single.feasible);
}

TEST_CASE("min-norm-point decision agrees with the exact linear-feasibility oracle") {
  Rng rng(0x10adu);
  int agreements = 0;
  for (int trial = 0; trial < 100; ++trial) {
    double mu = std::vector<double>{0.2, 0.5, 0.8}[rng.below(3)];
    int nf = std::vector<int>{3, 4, 8}[rng.below(3)];
    Vector3d o(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-20, 20));
    double r = rng.uniform(5, 30);
    std::vector<ContactFrame> frames;
    for (int c = 0; c < 2; ++c) {
      Vector3d out(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
      if (out.norm() < 1e-3) out = Vector3d::UnitX();
      out.normalize();
      frames.push_back(frame_at(o + r * out, -out, out.unitOrthogonal()));
    }
    std::vector<FrictionCone> cones = {friction_cone(mu, nf, frames[0]),
                                       friction_cone(mu, nf, frames[1])};
    auto ws = primitive_wrenches(frames, o, cones);
    bool mnp = force_closure_feasible(ws).feasible;
    std::vector<Eigen::Matrix<double, 6, 1>> cols;
    for (const auto& w : ws) cols.push_back(w.vec());
    bool lp = oracles::closure_lp_feasible(cols);
    CHECK(mnp == lp);
    agreements += (mnp == lp);
  }
  CHECK(agreements == 100);
}

TEST_CASE("feasibility invariant under lever scaling and joint rotation") {
  Vector3d o(3, 1, -2);
  auto frames = sphere_pair(o, 8.0, 0.9 * kPi);
  auto feasible_with = [&](const std::vector<ContactFrame>& fs, const Vector3d& center) {
    std::vector<FrictionCone> cones;
    for (const auto& f : fs) cones.push_back(friction_cone(0.5, 4, f));
    return force_closure_feasible(primitive_wrenches(fs, center, cones)).feasible;
  };
  bool base = feasible_with(frames, o);

  // uniform scaling of all lever arms
  auto scaled = sphere_pair(o, 24.0, 0.9 * kPi);
  CHECK(feasible_with(scaled, o) == base);

  // rigid rotation applied jointly to frames and center
  Eigen::Matrix3d R =
      Eigen::AngleAxisd(1.1, Vector3d(1, 2, -1).normalized()).toRotationMatrix();
  std::vector<ContactFrame> rotated;
  for (const auto& f : frames)
    rotated.push_back(frame_at(R * f.p.value(), R * f.normal.value(), R * f.t1.value()));
  CHECK(feasible_with(rotated, R * o) == base);
}

TEST_CASE("antipodality threshold behaviour around the closed-form flip") {
  double mu = 0.5;
  double theta_star = kPi - 2 * std::atan(mu);
  Vector3d o = Vector3d::Zero();

  SUBCASE("8-edge pyramid flips within one degree of the exact threshold") {
    double step = deg2rad(0.25);
    bool prev = closure_of(sphere_pair(o, 10.0, theta_star - deg2rad(3)), o, mu, 8);
    CHECK_FALSE(prev);
    double flip = -1;
    for (double th = theta_star - deg2rad(3); th < theta_star + deg2rad(3); th += step) {
      bool now = closure_of(sphere_pair(o, 10.0, th), o, mu, 8);
      if (now && !prev) flip = th;
      prev = prev || now;
    }
    REQUIRE(flip > 0);
    CHECK(std::abs(flip - theta_star) <= deg2rad(1.0));
  }
  SUBCASE("3-edge pyramid is conservative: infeasible below the exact threshold") {
    for (double th = theta_star - deg2rad(10); th < theta_star - 1e-6; th += deg2rad(1))
      CHECK_FALSE(closure_of(sphere_pair(o, 10.0, th), o, mu, 3));
  }
}
