#include "handspan/contact.hpp"

#include <cmath>

namespace handspan {

ContactFrame contact_position(const HandModel& model, const JointConfiguration& q,
                              const ContactParam& cp) {
  const Link& l = model.link(cp.link);
  if (l.is_palm()) {
    const Rectangle3& r = model.palm_inner;
    if (std::abs(cp.ux) > r.hx + kGeomTol || std::abs(cp.uy) > r.hy + kGeomTol)
      throw OutOfBounds("palm contact offset outside the inner surface");
    return palm_contact_frame<double>(r, cp.ux, cp.uy);
  }
  if (cp.alpha < -kGeomTol || cp.alpha > 1 + kGeomTol)
    throw OutOfBounds("contact height ratio outside [0, 1]");
  if (cp.phi <= -kPi - kGeomTol || cp.phi > kPi + kGeomTol)
    throw OutOfBounds("contact angle outside (-pi, pi]");
  auto frames = model.link_frames<double>(q.angles);
  return cylinder_contact_frame(frames[l.id], l.axial_length(), l.surface_radius(), cp.alpha,
                                cp.phi);
}

FrictionCone friction_cone(double mu, int n_edges, const ContactFrame& frame) {
  if (mu < 0) throw OutOfBounds("friction coefficient must be nonnegative");
  if (n_edges < 3) throw OutOfBounds("friction pyramid needs at least 3 edges");
  FrictionCone cone;
  cone.mu = mu;
  cone.n_edges = n_edges;
  for (int k = 1; k <= n_edges; ++k) {
    double a = 2.0 * kPi * k / n_edges;
    V3<double> e = frame.t1 * (mu * std::cos(a)) + frame.normal + frame.t2 * (mu * std::sin(a));
    cone.edges.push_back(e.value().normalized());
  }
  return cone;
}

std::vector<PrimitiveWrench> primitive_wrenches(const std::vector<ContactFrame>& frames,
                                                const Eigen::Vector3d& object_center,
                                                const std::vector<FrictionCone>& cones) {
  std::vector<PrimitiveWrench> out;
  for (size_t i = 0; i < frames.size(); ++i) {
    Eigen::Vector3d d = frames[i].p.value() - object_center;
    for (const Eigen::Vector3d& f : cones[i].edges) out.push_back({f, d.cross(f)});
  }
  return out;
}

ForceClosureResult force_closure_feasible(const std::vector<PrimitiveWrench>& wrenches) {
  ForceClosureResult res;
  res.coefficients.assign(wrenches.size(), 0.0);
  if (wrenches.empty()) return res;

  using Vec6 = Eigen::Matrix<double, 6, 1>;
  double scale = 0;
  std::vector<Vec6> p(wrenches.size());
  for (size_t i = 0; i < wrenches.size(); ++i) {
    p[i] = wrenches[i].vec();
    scale = std::max(scale, p[i].norm());
  }
  if (scale == 0) {  // all-zero wrenches: origin trivially representable
    res.feasible = true;
    res.coefficients.assign(wrenches.size(), 1.0 / wrenches.size());
    return res;
  }
  for (auto& v : p) v /= scale;

  // Wolfe's minimum-norm-point algorithm over the point set
  std::vector<int> idx;
  std::vector<double> lam;
  int start = 0;
  for (size_t i = 1; i < p.size(); ++i)
    if (p[i].squaredNorm() < p[start].squaredNorm()) start = static_cast<int>(i);
  idx = {start};
  lam = {1.0};
  Vec6 x = p[start];

  auto affine_minimizer = [&](Eigen::VectorXd& a) {
    // minimize ||S a|| over affine combinations (sum a = 1):
    // (11^T + S^T S) a = 1 (Wolfe's normalized system)
    int k = static_cast<int>(idx.size());
    Eigen::MatrixXd M(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) M(i, j) = 1.0 + p[idx[i]].dot(p[idx[j]]);
    a = M.ldlt().solve(Eigen::VectorXd::Ones(k));
    double s = a.sum();
    if (std::abs(s) < 1e-300) s = 1;
    a /= s;
  };

  const double opt_tol = 1e-14, zero_tol = 1e-12;
  for (int iter = 0; iter < 200; ++iter) {
    // major cycle: farthest-decreasing support point
    int best = 0;
    double bd = x.dot(p[0]);
    for (size_t i = 1; i < p.size(); ++i) {
      double d = x.dot(p[i]);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(i);
      }
    }
    if (x.squaredNorm() - bd <= opt_tol * std::max(1.0, x.squaredNorm())) break;
    bool present = false;
    for (int i : idx) present = present || i == best;
    if (present) break;  // numerical stall
    idx.push_back(best);
    lam.push_back(0.0);

    // minor cycle: pull x to the affine minimizer, dropping negative weights
    for (int minor = 0; minor < 64; ++minor) {
      Eigen::VectorXd a;
      affine_minimizer(a);
      if ((a.array() > -zero_tol).all()) {
        for (size_t i = 0; i < idx.size(); ++i) lam[i] = std::max(a[i], 0.0);
        break;
      }
      double theta = 1.0;
      for (size_t i = 0; i < idx.size(); ++i)
        if (a[i] < zero_tol && lam[i] > a[i]) theta = std::min(theta, lam[i] / (lam[i] - a[i]));
      for (size_t i = 0; i < idx.size(); ++i) lam[i] += theta * (a[i] - lam[i]);
      for (size_t i = idx.size(); i-- > 0;)
        if (lam[i] <= zero_tol) {
          idx.erase(idx.begin() + i);
          lam.erase(lam.begin() + i);
        }
    }
    double s = 0;
    for (double v : lam) s += v;
    for (double& v : lam) v /= s;
    x.setZero();
    for (size_t i = 0; i < idx.size(); ++i) x += lam[i] * p[idx[i]];
  }

  res.residual = x.norm() * scale;
  res.feasible = x.norm() <= 1e-8;
  for (size_t i = 0; i < idx.size(); ++i) res.coefficients[idx[i]] = lam[i];
  return res;
}

}  // namespace handspan
