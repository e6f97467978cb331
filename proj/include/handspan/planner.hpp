#pragma once

#include <set>
#include <string>
#include <vector>

#include "handspan/nlp.hpp"

namespace handspan {

// Consumption-of-redundancy measure of one grasp: two contacts, the joints
// they engage, and how much of the opposition span the grasp fills.
struct KEMetric {
  int n_c = 2;       // contact count
  int n_q = 0;       // engaged free joints across both carrier links
  double eta = 0;    // capacity ratio cap_max / contact distance
  double kappa = 1;  // e^{n_c} * e^{n_q} * e^{eta}
};

KEMetric kinematic_efficiency(int n_c, int n_q, double eta);
KEMetric kinematic_efficiency(const GraspSolution& solution);

// Candidate policy per planning step: Regular draws one random permissive
// opposition space and optimizes the plain grasp objective; the efficiency
// condition tests the smallest-capacity batch under the efficiency-weighted
// objective and keeps the best.
enum class PlanMode { Regular, KineticEfficiency };

// Evolving hand commitment across a grasp sequence.
struct PlannerState {
  PinnedJoints pinned;                 // joints consumed by prior grasps
  std::set<int> free_joints;           // complement of pinned
  std::set<LinkPair> consumed;         // opposition spaces already employed
  std::vector<std::pair<ObjectModel, GraspSolution>> grasped;  // posed results

  static PlannerState fresh(const HandModel& model);
};

struct PlanStep {
  std::string object_id;
  bool success = false;
  GraspSolution solution;  // valid when success
  KEMetric ke;             // valid when success
  int candidates_tried = 0;
  double solve_seconds = 0;
};

struct SequencePlan {
  std::vector<std::string> order;  // object ids as attempted
  std::vector<PlanStep> steps;     // one per attempted object
  int n_grasped = 0;
  double sequence_cost = 0;  // sum of cap_max over the successful steps
  PlannerState final_state;
};

// Grasps the objects in the given order, skipping any object that admits no
// feasible grasp and carrying held-object clearance constraints forward.
// Stops early once every joint is consumed.
SequencePlan plan_sequential(const HandModel& model, const std::vector<ObjectModel>& objects,
                             PlanMode mode, int batch, const GraspWeights& weights,
                             const SolveSettings& settings, int grid, Rng& rng,
                             const ReachabilityMap* unpinned_map = nullptr);

// Tries every object order (guarded against more than 6 objects unless an
// explicit order subset is supplied) and keeps the plan grasping the most
// objects, ties broken by the smaller sequence cost. Each order consumes an
// independent substream of the generator, so results are order-of-evaluation
// independent.
SequencePlan plan_greedy(const HandModel& model, const std::vector<ObjectModel>& objects,
                         PlanMode mode, int batch, const GraspWeights& weights,
                         const SolveSettings& settings, int grid, Rng& rng,
                         const std::vector<std::vector<int>>* orders = nullptr,
                         std::vector<SequencePlan>* all_plans = nullptr);

struct CampaignStepStats {
  int attempts = 0;
  int successes = 0;
  double success_rate = 0;
  double mean_n_q = 0, std_n_q = 0;
  double mean_eta = 0, std_eta = 0;
};

struct CampaignTrialRow {
  int trial = 0;
  int step = 0;
  std::string object_id;
  bool success = false;
  std::string os_pair;
  int n_q = 0;
  double eta = 0, kappa = 0;
  double sequence_cost = 0;  // running sum within the trial
  double solve_seconds = 0;
};

struct CampaignStats {
  PlanMode mode = PlanMode::Regular;
  int trials = 0;
  std::vector<CampaignStepStats> per_step;  // indexed by step (0-based)
  std::vector<CampaignTrialRow> rows;
  double total_solve_seconds = 0;
};

// Repeated sequential-grasp trials: each trial draws `objects_per_trial`
// distinct objects from the pool and plans them in draw order.
CampaignStats run_campaign(const HandModel& model, const std::vector<ObjectModel>& pool,
                           int trials, PlanMode mode, int batch, const GraspWeights& weights,
                           const SolveSettings& settings, int grid, Rng& rng,
                           int objects_per_trial = 3);

}  // namespace handspan
