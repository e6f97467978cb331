#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "handspan/ad.hpp"
#include "handspan/contact.hpp"
#include "handspan/object.hpp"
#include "handspan/reachability.hpp"

namespace handspan {

struct GraspWeights {
  double mu = 0.5;
  double lambda = 0.5;
  int n_f = 3;
  Eigen::Vector4d joint_weight{10, 50, 25, 10};  // per finger: abd, then flexions
};

enum class ObjectiveMode { Single, KineticEfficiency };

struct VarSpec {
  std::string name;
  double lo = 0, hi = 0;
};

// One grasp-synthesis problem: a chosen opposition space, one object, the
// current hand state (pinned joints) and the held objects it must avoid.
struct GraspProblem {
  const HandModel* model = nullptr;
  OppositionSpace os;
  ObjectModel object;                 // pose fields ignored (pose is optimized)
  std::vector<ObjectModel> grasped;   // held objects in their solved poses
  PinnedJoints pinned;
  GraspWeights weights;
  ObjectiveMode mode = ObjectiveMode::Single;
  bool kappa_one = false;  // force the efficiency factor to 1 (diagnostics)

  // derived layout
  int contact_link[2] = {-1, -1};
  bool contact_is_palm[2] = {false, false};
  std::vector<int> joint_vars;       // ordered free active joints of both links
  std::vector<double> joint_weights; // posture-cost weight per joint variable
  std::vector<double> joint_rest;    // rest angle per joint variable
  std::vector<VarSpec> vars;
  int idx_contact[2] = {0, 0};       // first variable index of each contact block
  int idx_pos = 0, idx_quat = 0, idx_coeff = 0;
  Aabb center_box;                   // box bound for the object center (OS extent)
  double grasp_distance = 0;         // force-closure minimum for the object

  // prebuilt collision structure
  struct LinkSamples {
    int link = -1;
    std::vector<double> axis_t;  // sample parameters along the axis
    double radius = 0;
  };
  std::vector<LinkSamples> link_samples;                 // all non-palm links
  std::vector<std::pair<int, int>> link_pairs;           // moving link-link pairs
  std::vector<int> palm_pairs;                           // moving link vs palm
  struct HeldPart {
    Eigen::Vector3d b0, b1;  // world-frame axis endpoints (equal for spheres)
    double radius = 0;
  };
  std::vector<HeldPart> held_parts;                      // held-object primitives
  int n_eq = 0, n_ineq = 0;

  int n_vars() const { return static_cast<int>(vars.size()); }
};

struct CostBreakdown {
  double c_f = 0, c_t = 0, c_q = 0;
  double kappa = 1, eta = 0;
  int n_q = 0, n_c = 2;
};

GraspProblem assemble_problem(const HandModel& model, const ReachabilityMap& map,
                              const OppositionSpace& os, const ObjectModel& object,
                              const std::vector<ObjectModel>& grasped,
                              const PinnedJoints& pinned, const GraspWeights& weights,
                              ObjectiveMode mode);

// Objective and constraint residuals at x: equalities target 0, inequalities
// feasible when <= 0. Templated over the scalar for derivative propagation.
template <class T>
struct Evaluation {
  T f{};
  std::vector<T> ceq, cineq;
};

template <class T>
Evaluation<T> evaluate(const GraspProblem& p, const std::vector<T>& x,
                       CostBreakdown* breakdown = nullptr);

extern template Evaluation<double> evaluate<double>(const GraspProblem&,
                                                    const std::vector<double>&, CostBreakdown*);
extern template Evaluation<Dual> evaluate<Dual>(const GraspProblem&, const std::vector<Dual>&,
                                                CostBreakdown*);

struct GraspSolution {
  Eigen::VectorXd x;
  OppositionSpace os;
  std::string object_id;
  double objective = 0;
  CostBreakdown costs;
  double max_violation = 0;
  bool feasible = false;
  int restarts_used = 0;

  JointConfiguration hand_configuration;    // full vector incl. pinned/rest joints
  ContactParam contact_params[2];
  ContactFrame contact_frames[2];
  Eigen::Vector3d object_center;
  Eigen::Quaterniond object_orientation;    // normalized
  std::vector<double> closure_coefficients;
  double contact_distance = 0;              // ||p1 - p2||
};

struct SolveSettings {
  int restarts = 8;
  int attempts_per_restart = 4;  // fresh random redraws when a restart stalls
  int outer_iterations = 40;
  int inner_iterations = 200;
  double feasibility_tol = 1e-6;
};

// Multi-start augmented-Lagrangian solve; returns the best feasible solution
// or nullopt (with best_violation reporting how close the attempts came).
std::optional<GraspSolution> solve(const GraspProblem& problem, const SolveSettings& settings,
                                   Rng& rng, double* best_violation = nullptr);

// Recompute every residual of a solution from scratch and verify the stored
// numbers; returns the recomputed max violation. Throws ValidationError on
// mismatch with the recorded values beyond `tol`.
double audit_solution(const GraspProblem& problem, const GraspSolution& solution,
                      double tol = 1e-6);

// Rebuilds the derived solution record (pose, frames, costs, violation) from
// a bare decision vector, e.g. one read back from a persisted report.
GraspSolution reconstruct_solution(const GraspProblem& problem, const Eigen::VectorXd& x);

struct SynthesisOutcome {
  GraspSolution best;
  int candidates_tried = 0;
  int feasible_candidates = 0;
};

// Candidate-iteration loop: try each opposition space in order, solve, and
// keep the feasible solution with the lowest objective (ties: smaller OS
// capacity). Throws NoFeasibleGrasp when every candidate fails.
SynthesisOutcome synthesize_grasp(const HandModel& model, const ReachabilityMap& map,
                                  const std::vector<OppositionSpace>& candidates,
                                  const ObjectModel& object,
                                  const std::vector<ObjectModel>& grasped,
                                  const PinnedJoints& pinned, const GraspWeights& weights,
                                  ObjectiveMode mode, const SolveSettings& settings, Rng& rng);

}  // namespace handspan
