#include "handspan/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <cstdio>
#include <cstdlib>

#include "handspan/contact.hpp"

namespace handspan {

namespace {

// Lever arms entering the wrench-balance equalities are expressed in units of
// 100 mm so force and torque residuals share a scale. Uniformly scaling every
// lever arm leaves the set of balancing coefficient vectors unchanged.
constexpr double kLeverScale = 0.01;

bool link_moves(const HandModel& model, int link, const std::vector<int>& joint_vars) {
  if (model.link(link).is_palm()) return false;
  for (int j : model.active_joints(link))
    if (std::find(joint_vars.begin(), joint_vars.end(), j) != joint_vars.end()) return true;
  return false;
}

}  // namespace

GraspProblem assemble_problem(const HandModel& model, const ReachabilityMap& map,
                              const OppositionSpace& os, const ObjectModel& object,
                              const std::vector<ObjectModel>& grasped,
                              const PinnedJoints& pinned, const GraspWeights& weights,
                              ObjectiveMode mode) {
  GraspProblem p;
  p.model = &model;
  p.os = os;
  p.object = object;
  p.grasped = grasped;
  p.pinned = pinned;
  p.weights = weights;
  p.mode = mode;

  p.grasp_distance = min_grasp_distance(object, weights.mu);
  if (!is_geometrically_permissive(os, p.grasp_distance))
    throw NotPermissive("opposition space (" + model.link(os.link_i).name + ", " +
                        model.link(os.link_j).name + ") cannot span distance " +
                        std::to_string(p.grasp_distance));

  p.contact_link[0] = os.link_i;
  p.contact_link[1] = os.link_j;
  for (int c = 0; c < 2; ++c) p.contact_is_palm[c] = model.link(p.contact_link[c]).is_palm();

  // free active joints of both links, deduplicated, in joint-id order
  std::set<int> jset;
  for (int c = 0; c < 2; ++c)
    for (int j : model.active_joints(p.contact_link[c]))
      if (!pinned.count(j)) jset.insert(j);
  p.joint_vars.assign(jset.begin(), jset.end());
  if (p.joint_vars.empty())
    throw NoFreeJoints("no free joints remain for links " + model.link(os.link_i).name + ", " +
                       model.link(os.link_j).name);

  for (int j : p.joint_vars) {
    const Joint& jt = model.joint(j);
    p.vars.push_back({jt.name, jt.lower, jt.upper});
  }
  const double pi = 3.14159265358979323846;
  for (int c = 0; c < 2; ++c) {
    p.idx_contact[c] = p.n_vars();
    if (p.contact_is_palm[c]) {
      p.vars.push_back({"c" + std::to_string(c) + ".ux", -model.palm_inner.hx,
                        model.palm_inner.hx});
      p.vars.push_back({"c" + std::to_string(c) + ".uy", -model.palm_inner.hy,
                        model.palm_inner.hy});
    } else {
      p.vars.push_back({"c" + std::to_string(c) + ".alpha", 0, 1});
      p.vars.push_back({"c" + std::to_string(c) + ".phi", -pi, pi});
    }
  }
  for (int l : {os.link_i, os.link_j}) {
    const Aabb& bb = map.spaces[l].hull.aabb;
    p.center_box.grow(bb.lo);
    p.center_box.grow(bb.hi);
  }
  p.idx_pos = p.n_vars();
  for (int k = 0; k < 3; ++k)
    p.vars.push_back({std::string("o.") + "xyz"[k], p.center_box.lo[k], p.center_box.hi[k]});
  p.idx_quat = p.n_vars();
  for (const char* n : {"q.x", "q.y", "q.z", "q.w"}) p.vars.push_back({n, -1, 1});
  p.idx_coeff = p.n_vars();
  for (int c = 0; c < 2; ++c)
    for (int k = 0; k < weights.n_f; ++k)
      p.vars.push_back({"phi" + std::to_string(c) + "." + std::to_string(k), 0, 1});

  if (p.n_vars() > 64)
    throw OutOfBounds("decision vector exceeds the derivative budget");

  // posture-cost weights: per-finger joint position selects the weight row
  p.joint_weights.resize(p.joint_vars.size(), 1.0);
  p.joint_rest.resize(p.joint_vars.size(), 0.0);
  for (size_t k = 0; k < p.joint_vars.size(); ++k) {
    const Joint& jt = model.joint(p.joint_vars[k]);
    p.joint_rest[k] = jt.rest;
    for (const FingerChain& fc : model.fingers) {
      auto it = std::find(fc.joint_ids.begin(), fc.joint_ids.end(), p.joint_vars[k]);
      if (it != fc.joint_ids.end()) {
        int pos = static_cast<int>(it - fc.joint_ids.begin());
        p.joint_weights[k] = weights.joint_weight[std::min(pos, 3)];
        break;
      }
    }
  }

  for (const Link& l : model.links) {
    if (l.is_palm()) continue;
    GraspProblem::LinkSamples ls;
    ls.link = l.id;
    ls.radius = l.surface_radius();
    ls.axis_t = axis_sample_params(l.axial_length(), l.surface_radius());
    p.link_samples.push_back(ls);
  }

  for (const auto& [pair, depth] : map.collision_map.entries) {
    (void)depth;
    const bool pi_palm = model.link(pair.first).is_palm();
    const bool pj_palm = model.link(pair.second).is_palm();
    const bool moves = link_moves(model, pair.first, p.joint_vars) ||
                       link_moves(model, pair.second, p.joint_vars);
    if (!moves) continue;  // both frames fixed: holds by construction of the scene
    if (pi_palm || pj_palm)
      p.palm_pairs.push_back(pi_palm ? pair.second : pair.first);
    else
      p.link_pairs.push_back(pair);
  }

  for (const ObjectModel& g : grasped) {
    Transform<double> pose = Transform<double>::from(g.pose());
    for (const ObjectPart& pp : g.parts) {
      Transform<double> pf = pose * Transform<double>::from(pp.local);
      GraspProblem::HeldPart hp;
      hp.radius = pp.radius();
      if (auto* cyl = std::get_if<CylinderShape>(&pp.shape)) {
        hp.b0 = pf.point({-cyl->h * 0.5, 0, 0}).value();
        hp.b1 = pf.point({cyl->h * 0.5, 0, 0}).value();
      } else {
        hp.b0 = hp.b1 = pf.p.value();
      }
      p.held_parts.push_back(hp);
    }
  }

  // residual counts, from one evaluation at the box midpoint
  std::vector<double> mid(p.n_vars());
  for (int k = 0; k < p.n_vars(); ++k) mid[k] = 0.5 * (p.vars[k].lo + p.vars[k].hi);
  Evaluation<double> probe = evaluate<double>(p, mid, nullptr);
  p.n_eq = static_cast<int>(probe.ceq.size());
  p.n_ineq = static_cast<int>(probe.cineq.size());
  return p;
}

template <class T>
Evaluation<T> evaluate(const GraspProblem& p, const std::vector<T>& x, CostBreakdown* breakdown) {
  const HandModel& m = *p.model;
  const GraspWeights& w = p.weights;
  const int nf = w.n_f;
  const double pi = 3.14159265358979323846;

  std::vector<T> angles(m.joints.size());
  for (const Joint& j : m.joints) {
    auto it = p.pinned.find(j.id);
    angles[j.id] = T(it != p.pinned.end() ? it->second : j.rest);
  }
  for (size_t k = 0; k < p.joint_vars.size(); ++k) angles[p.joint_vars[k]] = x[k];
  std::vector<Transform<T>> frames = m.link_frames(angles);

  ContactFrameT<T> cf[2];
  for (int c = 0; c < 2; ++c) {
    const int base = p.idx_contact[c];
    if (p.contact_is_palm[c]) {
      cf[c] = palm_contact_frame(m.palm_inner, x[base], x[base + 1]);
    } else {
      const Link& l = m.link(p.contact_link[c]);
      cf[c] = cylinder_contact_frame(frames[l.id], l.axial_length(), l.surface_radius(),
                                     x[base], x[base + 1]);
    }
  }

  Transform<T> pose;
  pose.R = quat_to_rot(x[p.idx_quat], x[p.idx_quat + 1], x[p.idx_quat + 2], x[p.idx_quat + 3]);
  pose.p = {x[p.idx_pos], x[p.idx_pos + 1], x[p.idx_pos + 2]};
  const int cpi = p.object.contact_part_index();
  const ObjectPart& cpart = p.object.parts[cpi];
  std::vector<PartSamples<T>> obj = object_samples(p.object, pose);
  V3<T> oc = contact_part_center(p.object, pose);

  Evaluation<T> out;
  out.ceq.reserve(12);

  // In-contact conditions, three equalities per contact. The carrier
  // condition places the link axis point at alpha (or, for the palm, the part
  // itself relative to the inner plane) at exactly touching distance, ruling
  // out penetration; two alignment conditions make the contact normal
  // collinear with the line to the nearest part-axis point, so the surface
  // point at (alpha, phi) or (ux, uy) is the true touching point. A sign
  // guard (appended to the inequalities) excludes the anti-aligned branch.
  Transform<T> part_frame = pose * Transform<T>::from(cpart.local);
  auto* part_cyl = std::get_if<CylinderShape>(&cpart.shape);
  V3<T> part_b0, part_b1;
  if (part_cyl) {
    part_b0 = part_frame.point({T(-part_cyl->h * 0.5), T(0), T(0)});
    part_b1 = part_frame.point({T(part_cyl->h * 0.5), T(0), T(0)});
  }
  std::vector<T> branch_guards;
  for (int c = 0; c < 2; ++c) {
    if (p.contact_is_palm[c]) {
      V3<T> q = part_frame.p;
      T off;
      if (part_cyl) {
        T o0 = point_rectangle_projection(part_b0, m.palm_inner).offset;
        T o1 = point_rectangle_projection(part_b1, m.palm_inner).offset;
        q = value_of(o0) <= value_of(o1) ? part_b0 : part_b1;
        off = min(o0, o1);
      } else {
        off = point_rectangle_projection(q, m.palm_inner).offset;
      }
      out.ceq.push_back(off - T(cpart.radius()));
      V3<T> d = q - cf[c].p;
      out.ceq.push_back(d.dot(V3<T>::from(m.palm_inner.ax)));
      out.ceq.push_back(d.dot(V3<T>::from(m.palm_inner.ay)));
      branch_guards.push_back(-d.dot(V3<T>::from(m.palm_inner.normal)));
    } else {
      const Link& l = m.link(p.contact_link[c]);
      V3<T> a = frames[l.id].point({x[p.idx_contact[c]] * T(l.axial_length()), T(0), T(0)});
      V3<T> q = part_frame.p;
      if (part_cyl) {
        V3<T> ab = part_b1 - part_b0;
        T t = clamp01((a - part_b0).dot(ab) / ab.squared_norm());
        q = part_b0 + ab * t;
      }
      V3<T> d = q - a;
      out.ceq.push_back(d.norm_safe() - T(l.surface_radius() + cpart.radius()));
      V3<T> w = cf[c].normal.cross(d);
      out.ceq.push_back(w.dot(cf[c].t1));
      out.ceq.push_back(w.dot(cf[c].t1.cross(cf[c].normal)));
      branch_guards.push_back(-cf[c].normal.dot(d));
    }
  }
  for (T& g : branch_guards) out.cineq.push_back(std::move(g));

  // wrench balance: the chosen convex combination of cone-edge wrenches is
  // zero and the coefficients form a convex combination
  T wsum[6] = {T(0), T(0), T(0), T(0), T(0), T(0)};
  T csum(0);
  for (int c = 0; c < 2; ++c) {
    V3<T> lever = (cf[c].p - oc) * T(kLeverScale);
    for (int k = 1; k <= nf; ++k) {
      const double th = 2.0 * pi * k / nf;
      V3<T> e = (cf[c].t1 * T(w.mu * std::cos(th)) + cf[c].normal +
                 cf[c].t2 * T(w.mu * std::sin(th)));
      e = e * (T(1) / e.norm_safe());
      V3<T> tq = lever.cross(e);
      const T& phi = x[p.idx_coeff + (c * nf) + (k - 1)];
      wsum[0] += phi * e.x;
      wsum[1] += phi * e.y;
      wsum[2] += phi * e.z;
      wsum[3] += phi * tq.x;
      wsum[4] += phi * tq.y;
      wsum[5] += phi * tq.z;
      csum += phi;
    }
  }
  for (int k = 0; k < 6; ++k) out.ceq.push_back(wsum[k]);
  out.ceq.push_back(csum - T(1));

  const T& qx = x[p.idx_quat];
  const T& qy = x[p.idx_quat + 1];
  const T& qz = x[p.idx_quat + 2];
  const T& qw = x[p.idx_quat + 3];
  out.ceq.push_back(qx * qx + qy * qy + qz * qz + qw * qw - T(1));

  // clearance inequalities, feasible when <= 0; links and cylinder parts are
  // capsules, so every pairwise clearance is an exact segment or point
  // distance (one row per pair)
  struct PartAxis {
    bool is_cylinder;
    V3<T> b0, b1;  // axis endpoints; b0 alone is the center for spheres
  };
  std::vector<PartAxis> part_axes(obj.size());
  for (size_t piidx = 0; piidx < obj.size(); ++piidx) {
    const ObjectPart& pp = p.object.parts[piidx];
    Transform<T> pf = pose * Transform<T>::from(pp.local);
    PartAxis& pa = part_axes[piidx];
    if (auto* cyl = std::get_if<CylinderShape>(&pp.shape)) {
      pa.is_cylinder = true;
      pa.b0 = pf.point({T(-cyl->h * 0.5), T(0), T(0)});
      pa.b1 = pf.point({T(cyl->h * 0.5), T(0), T(0)});
    } else {
      pa.is_cylinder = false;
      pa.b0 = pf.p;
    }
  }
  std::vector<std::array<V3<T>, 2>> link_ends(m.links.size());
  for (const auto& ls : p.link_samples) {
    const Link& l = m.link(ls.link);
    link_ends[ls.link] = {frames[ls.link].point({T(0), T(0), T(0)}),
                          frames[ls.link].point({T(l.axial_length()), T(0), T(0)})};
  }
  auto part_distance = [&](const V3<T>& a0, const V3<T>& a1, const PartAxis& pa) {
    return pa.is_cylinder ? segment_segment_distance(a0, a1, pa.b0, pa.b1)
                          : point_segment_distance(pa.b0, a0, a1);
  };

  // links vs object parts; a contact link is exempt from its own contact
  // part, where the carrier equality already excludes penetration
  for (const auto& ls : p.link_samples) {
    const bool is_contact = ls.link == p.contact_link[0] || ls.link == p.contact_link[1];
    const auto& [a0, a1] = link_ends[ls.link];
    for (size_t piidx = 0; piidx < obj.size(); ++piidx) {
      if (is_contact && static_cast<int>(piidx) == cpi) continue;
      const double clearance = ls.radius + obj[piidx].radius;
      out.cineq.push_back(T(clearance) - part_distance(a0, a1, part_axes[piidx]));
    }
  }

  // palm vs object parts (slab clearance against the mid-plane rectangle); a
  // palm contact exempts its own part, whose offset is pinned by the carrier
  // equality above
  const bool palm_contact = p.contact_is_palm[0] || p.contact_is_palm[1];
  const double palm_half = m.link(m.palm_link).surface_radius();
  for (size_t piidx = 0; piidx < obj.size(); ++piidx) {
    if (palm_contact && static_cast<int>(piidx) == cpi) continue;
    const double clearance = palm_half + obj[piidx].radius;
    const PartAxis& pa = part_axes[piidx];
    if (!pa.is_cylinder) {
      out.cineq.push_back(T(clearance) - point_rectangle_distance(pa.b0, m.palm_midplane));
    } else {
      const auto* cyl = std::get_if<CylinderShape>(&p.object.parts[piidx].shape);
      const int k = cylinder_axis_sample_count(cyl->h, cyl->r);
      for (int i = 0; i < k; ++i) {
        const double t = k == 1 ? 0.5 : static_cast<double>(i) / (k - 1);
        V3<T> b = pa.b0 + (pa.b1 - pa.b0) * T(t);
        out.cineq.push_back(T(clearance) - point_rectangle_distance(b, m.palm_midplane));
      }
    }
  }

  // moving self-collision pairs from the map
  for (const auto& [li, lj] : p.link_pairs) {
    const double clearance = m.link(li).surface_radius() + m.link(lj).surface_radius();
    const auto& [a0, a1] = link_ends[li];
    const auto& [b0, b1] = link_ends[lj];
    out.cineq.push_back(T(clearance) - segment_segment_distance(a0, a1, b0, b1));
  }
  // palm-adjacent links attach at the palm edge, so the rule constrains the
  // shaft against the grasp-side face only (dorsal excursions are excluded by
  // joint limits)
  for (int l : p.palm_pairs) {
    const Link& ll = m.link(l);
    for (double t : {0.0, 0.5, 1.0}) {
      V3<T> a = frames[l].point({T(t * ll.axial_length()), T(0), T(0)});
      out.cineq.push_back(T(ll.surface_radius()) - point_rectangle_distance(a, m.palm_inner));
    }
  }

  // clearance against objects already held
  for (const auto& hp : p.held_parts) {
    V3<T> h0 = V3<T>::from(hp.b0), h1 = V3<T>::from(hp.b1);
    for (size_t piidx = 0; piidx < obj.size(); ++piidx) {
      const double clearance = obj[piidx].radius + hp.radius;
      out.cineq.push_back(T(clearance) - part_distance(h0, h1, part_axes[piidx]));
    }
  }

  // objective
  V3<T> axis12 = cf[1].p - cf[0].p;
  T c_f = atan2(cf[0].normal.cross(axis12).norm_safe(), cf[0].normal.dot(axis12)) +
          atan2(cf[1].normal.cross(-axis12).norm_safe(), cf[1].normal.dot(-axis12));
  V3<T> up{T(0), T(0), T(1)};  // -g for unit gravity along -Z
  T c_t = ((oc - cf[0].p).cross(up) + (oc - cf[1].p).cross(up)).norm_safe() * T(kLeverScale);
  T c_q(0);
  for (size_t k = 0; k < p.joint_vars.size(); ++k) {
    T d = x[k] - T(p.joint_rest[k]);
    c_q += T(p.joint_weights[k]) * d * d;
  }

  const int n_c = 2;
  const int n_q = static_cast<int>(p.joint_vars.size());
  T eta = T(p.os.cap_max) / axis12.norm_safe();
  const double lam = w.lambda;
  if (p.mode == ObjectiveMode::Single || p.kappa_one) {
    out.f = T(lam) * (c_f + c_t) + T(1 - lam) * c_q;
  } else {
    // true objective is lam * e^{n_c + n_q + eta} (c_f + c_t) + (1-lam) c_q;
    // the solver minimizes it scaled by the constant e^{-(n_c + n_q)}
    out.f = T(lam) * exp(eta) * (c_f + c_t) +
            T((1 - lam) * std::exp(-static_cast<double>(n_c + n_q))) * c_q;
  }

  if (breakdown) {
    breakdown->c_f = value_of(c_f);
    breakdown->c_t = value_of(c_t);
    breakdown->c_q = value_of(c_q);
    breakdown->eta = value_of(eta);
    breakdown->n_q = n_q;
    breakdown->n_c = n_c;
    breakdown->kappa = (p.mode == ObjectiveMode::Single || p.kappa_one)
                           ? 1.0
                           : std::exp(n_c + n_q + value_of(eta));
  }
  return out;
}

template Evaluation<double> evaluate<double>(const GraspProblem&, const std::vector<double>&,
                                             CostBreakdown*);
template Evaluation<Dual> evaluate<Dual>(const GraspProblem&, const std::vector<Dual>&,
                                         CostBreakdown*);

namespace {

using Eigen::VectorXd;

double true_objective(const GraspProblem& p, const CostBreakdown& b) {
  return p.weights.lambda * b.kappa * (b.c_f + b.c_t) + (1 - p.weights.lambda) * b.c_q;
}

double max_violation(const Evaluation<double>& e) {
  double v = 0;
  for (double c : e.ceq) v = std::max(v, std::abs(c));
  for (double g : e.cineq) v = std::max(v, g);
  return v;
}

VectorXd project_box(const GraspProblem& p, const VectorXd& x) {
  VectorXd out = x;
  for (int i = 0; i < x.size(); ++i)
    out[i] = std::min(p.vars[i].hi, std::max(p.vars[i].lo, x[i]));
  return out;
}

Evaluation<Dual> eval_dual(const GraspProblem& p, const VectorXd& x) {
  const int n = static_cast<int>(x.size());
  std::vector<Dual> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = Dual::variable(x[i], n, i);
  return evaluate<Dual>(p, xs, nullptr);
}

Evaluation<double> eval_value(const GraspProblem& p, const VectorXd& x,
                              CostBreakdown* b = nullptr) {
  std::vector<double> xs(x.data(), x.data() + x.size());
  return evaluate<double>(p, xs, b);
}

struct AlState {
  VectorXd lam_eq, mu_ineq;
  double rho = 10.0;
};

double al_value(const GraspProblem& p, const AlState& al, const VectorXd& x) {
  Evaluation<double> e = eval_value(p, x);
  double L = e.f;
  for (int i = 0; i < static_cast<int>(e.ceq.size()); ++i)
    L += al.lam_eq[i] * e.ceq[i] + 0.5 * al.rho * e.ceq[i] * e.ceq[i];
  for (int i = 0; i < static_cast<int>(e.cineq.size()); ++i) {
    const double t = std::max(0.0, al.mu_ineq[i] + al.rho * e.cineq[i]);
    L += (t * t - al.mu_ineq[i] * al.mu_ineq[i]) / (2.0 * al.rho);
  }
  return L;
}

double al_value_grad(const GraspProblem& p, const AlState& al, const VectorXd& x,
                     VectorXd& grad) {
  const int n = static_cast<int>(x.size());
  Evaluation<Dual> e = eval_dual(p, x);
  Dual L = e.f;
  for (int i = 0; i < static_cast<int>(e.ceq.size()); ++i)
    L += Dual(al.lam_eq[i]) * e.ceq[i] + Dual(0.5 * al.rho) * e.ceq[i] * e.ceq[i];
  for (int i = 0; i < static_cast<int>(e.cineq.size()); ++i) {
    Dual t = max(Dual(0.0), Dual(al.mu_ineq[i]) + Dual(al.rho) * e.cineq[i]);
    L += (t * t - Dual(al.mu_ineq[i] * al.mu_ineq[i])) / Dual(2.0 * al.rho);
  }
  grad = VectorXd::Zero(n);
  if (L.g.size() == n) grad = L.g;
  return L.v;
}

// Projected L-BFGS descent on the augmented Lagrangian within the box.
void inner_minimize(const GraspProblem& p, const AlState& al, VectorXd& x, int iters,
                    double gtol) {
  const int n = static_cast<int>(x.size());
  std::deque<std::pair<VectorXd, VectorXd>> mem;  // (s, y)
  VectorXd g(n);
  double fx = al_value_grad(p, al, x, g);
  for (int it = 0; it < iters; ++it) {
    VectorXd pg = x - project_box(p, x - g);
    if (pg.lpNorm<Eigen::Infinity>() <= gtol) break;

    VectorXd d = -g;
    std::vector<double> alpha(mem.size());
    for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
      const auto& [s, y] = mem[i];
      alpha[i] = s.dot(d) / y.dot(s);
      d -= alpha[i] * y;
    }
    if (!mem.empty()) {
      const auto& [s, y] = mem.back();
      d *= s.dot(y) / y.dot(y);
    }
    for (size_t i = 0; i < mem.size(); ++i) {
      const auto& [s, y] = mem[i];
      d += (alpha[i] - y.dot(d) / y.dot(s)) * s;
    }
    if (d.dot(g) > -1e-12 * d.norm() * g.norm()) {
      mem.clear();
      d = -g;
    }

    double step = 1.0;
    VectorXd xn;
    double fn = fx;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      xn = project_box(p, x + step * d);
      const double pred = g.dot(xn - x);
      if (pred > -1e-16) {
        step *= 0.5;
        continue;
      }
      fn = al_value(p, al, xn);
      if (std::isfinite(fn) && fn <= fx + 1e-4 * pred) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (mem.empty()) break;
      mem.clear();
      continue;
    }

    VectorXd gn(n);
    al_value_grad(p, al, xn, gn);
    VectorXd s = xn - x, y = gn - g;
    if (s.dot(y) > 1e-10 * s.norm() * y.norm()) {
      mem.push_back({s, y});
      if (mem.size() > 10) mem.pop_front();
    }
    x = xn;
    fx = fn;
    g = gn;
  }
}

// Multiplier-method phase: pulls an arbitrary start into the basin of a
// feasible local optimum (moderate accuracy; later phases finish the job).
double al_phase(const GraspProblem& p, VectorXd& x, int outers, int inner) {
  AlState al;
  al.lam_eq = VectorXd::Zero(p.n_eq);
  al.mu_ineq = VectorXd::Zero(p.n_ineq);
  double prev_v = std::numeric_limits<double>::infinity();
  double gtol = 1e-3;
  int stall = 0;
  double v = prev_v;
  for (int outer = 0; outer < outers; ++outer) {
    inner_minimize(p, al, x, inner, gtol);
    Evaluation<double> e = eval_value(p, x);
    v = max_violation(e);
    if (std::getenv("HANDSPAN_NLP_TRACE"))
      std::fprintf(stderr, "  al %d rho %.1e vmax %.3e f %.6g\n", outer, al.rho, v, e.f);
    if (v <= 1e-6) break;
    for (int i = 0; i < p.n_eq; ++i) al.lam_eq[i] += al.rho * e.ceq[i];
    for (int i = 0; i < p.n_ineq; ++i)
      al.mu_ineq[i] = std::max(0.0, al.mu_ineq[i] + al.rho * e.cineq[i]);
    if (v > 0.7 * prev_v) al.rho = std::min(al.rho * 3.0, 1e7);
    stall = v > 0.999 * prev_v ? stall + 1 : 0;
    if (stall >= 3 || (v <= 1e-4 && outer >= 6)) break;
    prev_v = std::min(prev_v, v);
    gtol = std::max(1e-9, gtol * 0.3);
  }
  return v;
}

// Phase one: Levenberg-Marquardt descent of the squared residuals (all
// equalities plus violated inequalities) until a feasible point is found.
double lm_feasibility(const GraspProblem& p, VectorXd& x, int iters, bool eq_only = false) {
  const int n = static_cast<int>(x.size());
  double lm = 1e-3;
  double vmax = std::numeric_limits<double>::infinity();
  for (int it = 0; it < iters; ++it) {
    Evaluation<Dual> e = eval_dual(p, x);
    std::vector<const Dual*> rows;
    for (const Dual& c : e.ceq) rows.push_back(&c);
    if (!eq_only)
      for (const Dual& g : e.cineq)
        if (g.v > 0) rows.push_back(&g);
    vmax = 0;
    for (const Dual& c : e.ceq) vmax = std::max(vmax, std::abs(c.v));
    if (!eq_only)
      for (const Dual& g : e.cineq) vmax = std::max(vmax, g.v);
    if (vmax <= 1e-9) break;
    const int m = static_cast<int>(rows.size());
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, n);
    VectorXd r(m);
    double phi = 0;
    for (int i = 0; i < m; ++i) {
      r[i] = rows[i]->v;
      phi += 0.5 * r[i] * r[i];
      if (rows[i]->g.size() == n) J.row(i) = rows[i]->g.transpose();
    }
    Eigen::MatrixXd H = J.transpose() * J;
    VectorXd grad = J.transpose() * r;
    bool accepted = false;
    for (int tries = 0; tries < 25; ++tries) {
      Eigen::MatrixXd Hd = H;
      for (int i = 0; i < n; ++i) Hd(i, i) += lm * std::max(H(i, i), 1e-8);
      VectorXd dx = Hd.ldlt().solve(-grad);
      VectorXd xn = project_box(p, x + dx);
      Evaluation<double> en = eval_value(p, xn);
      double phin = 0;
      for (double c : en.ceq) phin += 0.5 * c * c;
      if (!eq_only)
        for (double g : en.cineq)
          if (g > 0) phin += 0.5 * g * g;
      if (std::isfinite(phin) && phin < phi) {
        x = xn;
        lm = std::max(lm / 3.0, 1e-12);
        accepted = true;
        break;
      }
      lm *= 4.0;
      if (lm > 1e10) return vmax;  // stuck in an infeasible local basin
    }
    if (!accepted) return vmax;
  }
  return vmax;
}

// Gauss-Newton least-norm polish driving the residuals (all equalities plus
// violated inequalities) to zero with minimal movement of x; near-active
// inequalities are held so the step cannot push them out.
double restore_feasibility(const GraspProblem& p, VectorXd& x, int iters) {
  const int n = static_cast<int>(x.size());
  double vmax = std::numeric_limits<double>::infinity();
  for (int it = 0; it < iters; ++it) {
    Evaluation<Dual> e = eval_dual(p, x);
    std::vector<std::pair<const Dual*, double>> rows;  // (residual, target)
    for (const Dual& c : e.ceq) rows.push_back({&c, c.v});
    for (const Dual& g : e.cineq)
      if (g.v > -1e-5) rows.push_back({&g, std::max(g.v, 0.0)});
    vmax = 0;
    for (const Dual& c : e.ceq) vmax = std::max(vmax, std::abs(c.v));
    for (const Dual& g : e.cineq) vmax = std::max(vmax, g.v);
    if (vmax <= 1e-10) break;
    const int m = static_cast<int>(rows.size());
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(m, n);
    VectorXd r(m);
    for (int i = 0; i < m; ++i) {
      r[i] = rows[i].second;
      if (rows[i].first->g.size() == n) J.row(i) = rows[i].first->g.transpose();
    }
    Eigen::MatrixXd JJt = J * J.transpose();
    JJt.diagonal().array() += 1e-10;
    VectorXd dx = J.transpose() * JJt.ldlt().solve(-r);
    double step = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 20; ++ls) {
      VectorXd xn = project_box(p, x + step * dx);
      Evaluation<double> en = eval_value(p, xn);
      if (max_violation(en) < vmax) {
        x = xn;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return vmax;
}

// Phase two: feasible-path descent. Steps follow the objective gradient
// projected onto the tangent space of the active constraints (range-scaled
// metric), and every trial point is re-restored before acceptance.
void descent_phase(const GraspProblem& p, VectorXd& x, int iters, double feas_tol) {
  const int n = static_cast<int>(x.size());
  VectorXd scale(n);
  for (int i = 0; i < n; ++i)
    scale[i] = std::max(0.05, 0.25 * (p.vars[i].hi - p.vars[i].lo));
  CostBreakdown costs;
  Evaluation<double> cur = eval_value(p, x, &costs);
  double fx = cur.f;
  double radius = 0.5;
  for (int it = 0; it < iters && radius > 1e-6; ++it) {
    Evaluation<Dual> e = eval_dual(p, x);
    VectorXd gf = VectorXd::Zero(n);
    if (e.f.g.size() == n) gf = e.f.g;

    std::vector<const GradVec*> act;
    for (const Dual& c : e.ceq)
      if (c.g.size() == n) act.push_back(&c.g);
    for (const Dual& g : e.cineq)
      if (g.v > -1e-6 && g.g.size() == n) act.push_back(&g.g);
    const int m = static_cast<int>(act.size());
    // scaled steepest descent, projected onto the active tangent space
    VectorXd d0 = -(scale.array().square() * gf.array()).matrix();
    VectorXd dx = d0;
    if (m > 0) {
      Eigen::MatrixXd A(m, n);
      for (int i = 0; i < m; ++i) A.row(i) = act[i]->transpose();
      Eigen::MatrixXd AD = A * scale.array().square().matrix().asDiagonal();
      Eigen::MatrixXd M = AD * A.transpose();
      M.diagonal().array() += 1e-12 * (1.0 + M.diagonal().maxCoeff());
      VectorXd y = M.ldlt().solve(A * d0);
      dx = d0 - AD.transpose() * y;
    }
    const double dn = dx.norm();
    if (dn < 1e-12) break;
    dx /= dn;

    bool accepted = false;
    while (radius > 1e-6) {
      VectorXd xn = project_box(p, x + radius * dx);
      double v = restore_feasibility(p, xn, 8);
      if (v <= 0.1 * feas_tol) {
        CostBreakdown cn;
        Evaluation<double> en = eval_value(p, xn, &cn);
        if (en.f < fx - 1e-12) {
          x = xn;
          fx = en.f;
          radius = std::min(radius * 1.5, 20.0);
          accepted = true;
          break;
        }
      }
      radius *= 0.4;
    }
    if (!accepted) break;
  }
}

struct StartResult {
  VectorXd x;
  double violation = std::numeric_limits<double>::infinity();
  double objective = std::numeric_limits<double>::infinity();
  CostBreakdown costs;
  bool feasible = false;
};

StartResult solve_from(const GraspProblem& p, const SolveSettings& st, const VectorXd& x0) {
  VectorXd x = project_box(p, x0);
  al_phase(p, x, 14, st.inner_iterations);
  double v = lm_feasibility(p, x, 250);
  if (std::getenv("HANDSPAN_NLP_TRACE"))
    std::fprintf(stderr, "  feasibility phase: vmax %.3e\n", v);
  if (v <= 1e-7) {
    restore_feasibility(p, x, 20);
    descent_phase(p, x, st.inner_iterations, st.feasibility_tol);
    restore_feasibility(p, x, 20);
  }

  StartResult r;
  r.x = x;
  Evaluation<double> e = eval_value(p, x, &r.costs);
  r.violation = max_violation(e);
  if (std::getenv("HANDSPAN_NLP_TRACE") && r.violation > st.feasibility_tol) {
    for (size_t i = 0; i < e.ceq.size(); ++i)
      if (std::abs(e.ceq[i]) > 0.3 * r.violation)
        std::fprintf(stderr, "    worst eq[%zu] = %.3e\n", i, e.ceq[i]);
    for (size_t i = 0; i < e.cineq.size(); ++i)
      if (e.cineq[i] > 0.3 * r.violation)
        std::fprintf(stderr, "    worst ineq[%zu] = %.3e\n", i, e.cineq[i]);
  }
  r.feasible = r.violation <= st.feasibility_tol;
  r.objective = true_objective(p, r.costs);
  if (std::getenv("HANDSPAN_NLP_TRACE"))
    std::fprintf(stderr, "  result: vmax %.3e f %.6g feasible %d\n", r.violation, r.objective,
                 r.feasible);
  return r;
}

VectorXd initial_point(const GraspProblem& p, Rng& rng) {
  VectorXd x0(p.n_vars());
  const HandModel& m = *p.model;
  for (size_t k = 0; k < p.joint_vars.size(); ++k) x0[k] = m.joint(p.joint_vars[k]).rest;
  for (int c = 0; c < 2; ++c) {
    const int base = p.idx_contact[c];
    x0[base] = rng.uniform(p.vars[base].lo, p.vars[base].hi);
    x0[base + 1] = rng.uniform(p.vars[base + 1].lo, p.vars[base + 1].hi);
  }
  for (int k = 0; k < 3; ++k)
    x0[p.idx_pos + k] = rng.uniform(p.center_box.lo[k], p.center_box.hi[k]);
  double q[4];
  rng.unit_quaternion(q);
  for (int k = 0; k < 4; ++k) x0[p.idx_quat + k] = q[k];
  for (int k = 0; k < 2 * p.weights.n_f; ++k)
    x0[p.idx_coeff + k] = 1.0 / (2.0 * p.weights.n_f);
  return x0;
}

GraspSolution make_solution(const GraspProblem& p, const StartResult& r, int restarts) {
  GraspSolution s;
  s.x = r.x;
  s.os = p.os;
  s.object_id = p.object.id;
  s.costs = r.costs;
  s.objective = r.objective;
  s.max_violation = r.violation;
  s.feasible = r.feasible;
  s.restarts_used = restarts;

  const HandModel& m = *p.model;
  s.hand_configuration.angles.resize(m.joints.size());
  for (const Joint& j : m.joints) {
    auto it = p.pinned.find(j.id);
    s.hand_configuration.angles[j.id] = it != p.pinned.end() ? it->second : j.rest;
  }
  for (size_t k = 0; k < p.joint_vars.size(); ++k)
    s.hand_configuration.angles[p.joint_vars[k]] = r.x[k];

  for (int c = 0; c < 2; ++c) {
    ContactParam cp;
    cp.link = p.contact_link[c];
    const int base = p.idx_contact[c];
    if (p.contact_is_palm[c]) {
      cp.ux = r.x[base];
      cp.uy = r.x[base + 1];
    } else {
      cp.alpha = r.x[base];
      cp.phi = r.x[base + 1];
    }
    s.contact_params[c] = cp;
    s.contact_frames[c] = contact_position(m, s.hand_configuration, cp);
  }
  s.object_center = {r.x[p.idx_pos], r.x[p.idx_pos + 1], r.x[p.idx_pos + 2]};
  s.object_orientation = Eigen::Quaterniond(r.x[p.idx_quat + 3], r.x[p.idx_quat],
                                            r.x[p.idx_quat + 1], r.x[p.idx_quat + 2])
                             .normalized();
  s.closure_coefficients.assign(r.x.data() + p.idx_coeff, r.x.data() + p.n_vars());
  s.contact_distance = (s.contact_frames[1].p.value() - s.contact_frames[0].p.value()).norm();
  return s;
}

}  // namespace

std::optional<GraspSolution> solve(const GraspProblem& problem, const SolveSettings& settings,
                                   Rng& rng, double* best_violation) {
  std::optional<StartResult> best;
  double min_v = std::numeric_limits<double>::infinity();
  for (int r = 0; r < settings.restarts; ++r) {
    Rng stream = rng.stream(static_cast<std::uint64_t>(r));
    // A restart retries from fresh random draws of the same initialization
    // scheme when its attempt stalls short of feasibility.
    for (int attempt = 0; attempt < settings.attempts_per_restart; ++attempt) {
      StartResult sr = solve_from(problem, settings, initial_point(problem, stream));
      min_v = std::min(min_v, sr.violation);
      if (sr.feasible && (!best || sr.objective < best->objective)) best = sr;
      if (sr.feasible) break;
    }
  }
  if (best_violation) *best_violation = min_v;
  if (!best) return std::nullopt;
  return make_solution(problem, *best, settings.restarts);
}

GraspSolution reconstruct_solution(const GraspProblem& problem, const Eigen::VectorXd& x) {
  if (x.size() != problem.n_vars())
    throw ValidationError("decision vector has " + std::to_string(x.size()) +
                          " entries, expected " + std::to_string(problem.n_vars()));
  StartResult r;
  r.x = x;
  std::vector<double> xs(x.data(), x.data() + x.size());
  Evaluation<double> e = evaluate<double>(problem, xs, &r.costs);
  r.violation = 0;
  for (double c : e.ceq) r.violation = std::max(r.violation, std::abs(c));
  for (double c : e.cineq) r.violation = std::max(r.violation, c);
  r.objective = true_objective(problem, r.costs);
  r.feasible = r.violation <= 1e-6;
  return make_solution(problem, r, 0);
}

double audit_solution(const GraspProblem& problem, const GraspSolution& solution, double tol) {
  std::vector<double> xs(solution.x.data(), solution.x.data() + solution.x.size());
  CostBreakdown costs;
  Evaluation<double> e = evaluate<double>(problem, xs, &costs);
  double v = 0;
  std::string worst = "none";
  for (size_t i = 0; i < e.ceq.size(); ++i)
    if (std::abs(e.ceq[i]) > v) {
      v = std::abs(e.ceq[i]);
      worst = "equality " + std::to_string(i);
    }
  for (size_t i = 0; i < e.cineq.size(); ++i)
    if (e.cineq[i] > v) {
      v = e.cineq[i];
      worst = "inequality " + std::to_string(i);
    }
  if (v > tol)
    throw ValidationError("constraint violated beyond tolerance: " + worst + " = " +
                          std::to_string(v));
  if (std::abs(v - solution.max_violation) > 1e-9)
    throw ValidationError("recorded violation does not match recomputation");
  if (std::abs(true_objective(problem, costs) - solution.objective) >
      1e-9 * std::max(1.0, std::abs(solution.objective)))
    throw ValidationError("recorded objective does not match recomputation");

  // independent force-closure certificate at the solved contacts
  std::vector<ContactFrame> frames{solution.contact_frames[0], solution.contact_frames[1]};
  std::vector<FrictionCone> cones;
  for (const ContactFrame& f : frames)
    cones.push_back(friction_cone(problem.weights.mu, problem.weights.n_f, f));
  Eigen::Isometry3d pose = Eigen::Isometry3d::Identity();
  pose.linear() = solution.object_orientation.toRotationMatrix();
  pose.translation() = solution.object_center;
  Eigen::Vector3d oc =
      contact_part_center(problem.object, Transform<double>::from(pose)).value();
  ForceClosureResult fc = force_closure_feasible(primitive_wrenches(frames, oc, cones));
  if (!fc.feasible && fc.residual > tol)
    throw ValidationError("solved contacts do not admit force closure");
  return v;
}

SynthesisOutcome synthesize_grasp(const HandModel& model, const ReachabilityMap& map,
                                  const std::vector<OppositionSpace>& candidates,
                                  const ObjectModel& object,
                                  const std::vector<ObjectModel>& grasped,
                                  const PinnedJoints& pinned, const GraspWeights& weights,
                                  ObjectiveMode mode, const SolveSettings& settings, Rng& rng) {
  SynthesisOutcome out;
  bool have = false;
  const double d = min_grasp_distance(object, weights.mu);
  for (size_t ci = 0; ci < candidates.size(); ++ci) {
    const OppositionSpace& os = candidates[ci];
    if (!is_geometrically_permissive(os, d)) continue;
    GraspProblem problem;
    try {
      problem = assemble_problem(model, map, os, object, grasped, pinned, weights, mode);
    } catch (const NoFreeJoints&) {
      continue;
    }
    ++out.candidates_tried;
    Rng stream = rng.stream(static_cast<std::uint64_t>(ci) + 0x5051ull);
    // Stall-rescue redraws exist to find *a* feasible grasp; once one
    // candidate has produced a solution, later candidates only refine the
    // objective and get a single attempt per restart.
    SolveSettings st = settings;
    if (have) st.attempts_per_restart = 1;
    std::optional<GraspSolution> sol = solve(problem, st, stream);
    if (!sol) continue;
    ++out.feasible_candidates;
    if (!have) {
      out.best = *sol;
      have = true;
      continue;
    }
    const double scale = std::max(1.0, std::abs(out.best.objective));
    if (sol->objective < out.best.objective - 1e-9 * scale ||
        (std::abs(sol->objective - out.best.objective) <= 1e-9 * scale &&
         sol->os.cap_max < out.best.os.cap_max)) {
      out.best = *sol;
    }
  }
  if (!have)
    throw NoFeasibleGrasp("no candidate opposition space produced a feasible grasp for " +
                          object.id);
  return out;
}

}  // namespace handspan
