#include "handspan/planner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "handspan/reachability.hpp"

namespace handspan {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

KEMetric kinematic_efficiency(int n_c, int n_q, double eta) {
  KEMetric m;
  m.n_c = n_c;
  m.n_q = n_q;
  m.eta = eta;
  m.kappa = std::exp(static_cast<double>(n_c)) * std::exp(static_cast<double>(n_q)) *
            std::exp(eta);
  return m;
}

KEMetric kinematic_efficiency(const GraspSolution& solution) {
  if (solution.contact_distance <= 0)
    throw DegenerateInput("solution has coincident contacts");
  return kinematic_efficiency(solution.costs.n_c, solution.costs.n_q,
                              solution.os.cap_max / solution.contact_distance);
}

PlannerState PlannerState::fresh(const HandModel& model) {
  PlannerState st;
  for (const Joint& j : model.joints) st.free_joints.insert(j.id);
  return st;
}

SequencePlan plan_sequential(const HandModel& model, const std::vector<ObjectModel>& objects,
                             PlanMode mode, int batch, const GraspWeights& weights,
                             const SolveSettings& settings, int grid, Rng& rng,
                             const ReachabilityMap* unpinned_map) {
  SequencePlan plan;
  PlannerState st = PlannerState::fresh(model);
  const ObjectiveMode om = mode == PlanMode::KineticEfficiency
                               ? ObjectiveMode::KineticEfficiency
                               : ObjectiveMode::Single;

  for (size_t k = 0; k < objects.size(); ++k) {
    if (st.free_joints.empty()) break;
    const ObjectModel& obj = objects[k];
    plan.order.push_back(obj.id);
    PlanStep step;
    step.object_id = obj.id;
    Rng step_rng = rng.stream(0x706C616E00ULL + k);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      ReachabilityMap local_map;
      const ReachabilityMap* map = unpinned_map;
      if (!map || !st.pinned.empty()) {
        local_map = build_reachability_map(model, st.pinned, grid);
        map = &local_map;
      }
      const double d = min_grasp_distance(obj, weights.mu);
      std::vector<OppositionSpace> candidates;
      if (mode == PlanMode::KineticEfficiency) {
        candidates = select_os_candidates(map->os_set, d, batch, st.consumed);
      } else {
        candidates = {select_random_permissive(map->os_set, d, step_rng, st.consumed)};
      }
      std::vector<ObjectModel> held;
      held.reserve(st.grasped.size());
      for (const auto& [o, sol] : st.grasped) held.push_back(o);

      SynthesisOutcome out = synthesize_grasp(model, *map, candidates, obj, held, st.pinned,
                                              weights, om, settings, step_rng);
      step.success = true;
      step.solution = out.best;
      step.candidates_tried = out.candidates_tried;
      step.ke = kinematic_efficiency(out.best);

      // Commit: pin every still-free joint driving either carrier link at its
      // solved angle, retire the employed opposition space, and keep the
      // placed object as a clearance constraint for later steps.
      for (int link : {out.best.os.link_i, out.best.os.link_j}) {
        for (int j : model.active_joints(link)) {
          if (!st.free_joints.count(j)) continue;
          st.pinned[j] = out.best.hand_configuration.angles[j];
          st.free_joints.erase(j);
        }
      }
      st.consumed.insert(std::minmax(out.best.os.link_i, out.best.os.link_j));
      ObjectModel placed = obj;
      placed.center = out.best.object_center;
      placed.orientation = out.best.object_orientation;
      st.grasped.push_back({placed, out.best});
      plan.n_grasped += 1;
      plan.sequence_cost += out.best.os.cap_max;
    } catch (const NoPermissiveOS&) {
    } catch (const NoFeasibleGrasp&) {
    }
    step.solve_seconds = seconds_since(t0);
    plan.steps.push_back(std::move(step));
  }
  plan.final_state = std::move(st);
  return plan;
}

SequencePlan plan_greedy(const HandModel& model, const std::vector<ObjectModel>& objects,
                         PlanMode mode, int batch, const GraspWeights& weights,
                         const SolveSettings& settings, int grid, Rng& rng,
                         const std::vector<std::vector<int>>* orders,
                         std::vector<SequencePlan>* all_plans) {
  std::vector<std::vector<int>> enumerated;
  if (!orders) {
    if (objects.size() > 6)
      throw TooManyPermutations("cannot enumerate orders of " +
                                std::to_string(objects.size()) +
                                " objects; supply an explicit order subset");
    std::vector<int> idx(objects.size());
    std::iota(idx.begin(), idx.end(), 0);
    do {
      enumerated.push_back(idx);
    } while (std::next_permutation(idx.begin(), idx.end()));
    orders = &enumerated;
  }
  if (orders->empty()) throw DegenerateInput("no orders to evaluate");

  std::optional<SequencePlan> best;
  for (size_t k = 0; k < orders->size(); ++k) {
    std::vector<ObjectModel> permuted;
    permuted.reserve((*orders)[k].size());
    for (int i : (*orders)[k]) permuted.push_back(objects.at(i));
    // Every order draws from its own substream of the base generator, so the
    // outcome per order does not depend on evaluation order.
    Rng order_rng = rng.stream(0x6F726400ULL + k);
    SequencePlan plan = plan_sequential(model, permuted, mode, batch, weights, settings,
                                        grid, order_rng);
    const bool better =
        !best || plan.n_grasped > best->n_grasped ||
        (plan.n_grasped == best->n_grasped && plan.sequence_cost < best->sequence_cost);
    if (all_plans) all_plans->push_back(plan);
    if (better) best = std::move(plan);
  }
  return *best;
}

CampaignStats run_campaign(const HandModel& model, const std::vector<ObjectModel>& pool,
                           int trials, PlanMode mode, int batch, const GraspWeights& weights,
                           const SolveSettings& settings, int grid, Rng& rng,
                           int objects_per_trial) {
  if (trials < 1) throw OutOfBounds("campaign needs at least one trial");
  if (objects_per_trial < 1 || objects_per_trial > static_cast<int>(pool.size()))
    throw OutOfBounds("objects per trial must fit within the pool");

  CampaignStats stats;
  stats.mode = mode;
  stats.trials = trials;
  stats.per_step.resize(objects_per_trial);
  std::vector<std::vector<double>> nq_samples(objects_per_trial), eta_samples(objects_per_trial);

  const ReachabilityMap base_map = build_reachability_map(model, {}, grid);
  const auto t0 = std::chrono::steady_clock::now();
  for (int t = 0; t < trials; ++t) {
    Rng trial_rng = rng.stream(0x747269616CULL + static_cast<std::uint64_t>(t));
    std::vector<int> chosen;
    while (static_cast<int>(chosen.size()) < objects_per_trial) {
      int i = static_cast<int>(trial_rng.below(pool.size()));
      if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) chosen.push_back(i);
    }
    std::vector<ObjectModel> drawn;
    for (int i : chosen) drawn.push_back(pool[i]);

    SequencePlan plan = plan_sequential(model, drawn, mode, batch, weights, settings, grid,
                                        trial_rng, &base_map);
    double running_cost = 0;
    for (size_t s = 0; s < plan.steps.size(); ++s) {
      const PlanStep& step = plan.steps[s];
      CampaignStepStats& agg = stats.per_step[s];
      agg.attempts += 1;
      CampaignTrialRow row;
      row.trial = t;
      row.step = static_cast<int>(s);
      row.object_id = step.object_id;
      row.success = step.success;
      row.solve_seconds = step.solve_seconds;
      if (step.success) {
        agg.successes += 1;
        nq_samples[s].push_back(step.ke.n_q);
        eta_samples[s].push_back(step.ke.eta);
        row.os_pair = model.link(step.solution.os.link_i).name + "-" +
                      model.link(step.solution.os.link_j).name;
        row.n_q = step.ke.n_q;
        row.eta = step.ke.eta;
        row.kappa = step.ke.kappa;
        running_cost += step.solution.os.cap_max;
      }
      row.sequence_cost = running_cost;
      stats.rows.push_back(std::move(row));
    }
  }
  stats.total_solve_seconds = seconds_since(t0);

  for (int s = 0; s < objects_per_trial; ++s) {
    CampaignStepStats& agg = stats.per_step[s];
    if (agg.attempts) agg.success_rate = static_cast<double>(agg.successes) / agg.attempts;
    auto moments = [](const std::vector<double>& v, double& mean, double& sd) {
      if (v.empty()) return;
      mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
      double ss = 0;
      for (double x : v) ss += (x - mean) * (x - mean);
      sd = std::sqrt(ss / v.size());
    };
    moments(nq_samples[s], agg.mean_n_q, agg.std_n_q);
    moments(eta_samples[s], agg.mean_eta, agg.std_eta);
  }
  return stats;
}

}  // namespace handspan
