#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "handspan/planner.hpp"

namespace handspan {

// Settings block shared by every command; unset fields take these defaults.
struct PlannerSettings {
  PlanMode mode = PlanMode::Regular;
  int batch = 3;        // opposition-space candidates per planning step
  double lambda = 0.5;  // grasp-term weight in the objective
  double mu = 0.5;      // friction coefficient
  int n_f = 3;          // friction-cone edge count
  int grid = 9;         // joint-range samples per free joint
  int restarts = 8;
  std::optional<std::uint64_t> seed;
  int trials = 100;

  GraspWeights weights() const {
    GraspWeights w;
    w.mu = mu;
    w.lambda = lambda;
    w.n_f = n_f;
    return w;
  }
  SolveSettings solve_settings() const {
    SolveSettings s;
    s.restarts = restarts;
    return s;
  }
};

struct SceneDocument {
  std::string hand;  // path of the hand spec, relative to the scene file
  std::vector<ObjectModel> objects;
  PlannerSettings settings;
};

// Parses and validates a scene; errors name the offending field path.
SceneDocument load_scene(const std::string& path);

// Parses a bare object list ({"objects": [...]}), the format of the catalog.
std::vector<ObjectModel> load_object_catalog(const std::string& path);

// Deterministic serialization: object keys sorted, doubles shortest
// round-trip, trailing newline. Reruns with equal inputs are byte-identical.
void write_text_file(const std::string& path, const std::string& text);

std::string grasp_report(const PlannerSettings& settings, const HandModel& model,
                         const GraspSolution& solution);
std::string sequence_report(const PlannerSettings& settings, const HandModel& model,
                            const SequencePlan& plan);
std::string campaign_report(const PlannerSettings& settings, const CampaignStats& stats);
std::string campaign_csv(const CampaignStats& stats);

// Reads a grasp report back into the subset of fields needed to re-audit it.
struct PersistedGrasp {
  std::string object_id;
  std::string os_i, os_j;  // link names
  std::vector<double> x;   // full decision vector
  double objective = 0;
  double max_violation = 0;
};
PersistedGrasp read_grasp_report(const std::string& path);

// ASCII triangle-mesh export of the posed hand plus objects.
void export_scene_obj(const HandModel& model, const JointConfiguration& config,
                      const std::vector<ObjectModel>& objects, const std::string& path);

}  // namespace handspan
