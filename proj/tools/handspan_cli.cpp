// Command-line front end: scene analysis, grasp synthesis, sequential and
// greedy planning, batch campaigns, and re-auditing of persisted solutions.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

#include "handspan/planner.hpp"
#include "handspan/scene.hpp"

using namespace handspan;
namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string scene_path;
  std::string hand_path;
  std::optional<std::string> mode;
  std::optional<int> batch, trials, grid, restarts;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool scene_required) {
  auto* scene = cmd->add_option("--scene", o.scene_path, "scene document (JSON)");
  if (scene_required) scene->required();
  cmd->add_option("--hand", o.hand_path, "hand spec path (overrides the scene)");
  cmd->add_option("--mode", o.mode, "planning condition: single | ke")
      ->check(CLI::IsMember({"single", "ke"}));
  cmd->add_option("--batch", o.batch, "opposition-space candidates per step");
  cmd->add_option("--trials", o.trials, "campaign trial count");
  cmd->add_option("--seed", o.seed, "random seed (overrides the scene)");
  cmd->add_option("--grid", o.grid, "joint-range samples per free joint");
  cmd->add_option("--restarts", o.restarts, "solver restarts per candidate");
  cmd->add_option("--out", o.out_dir, "output directory (default $HANDSPAN_OUT or ./out)");
}

// Scene with command-line overrides applied on top.
SceneDocument resolve_scene(const CommonOpts& o) {
  SceneDocument sc;
  if (!o.scene_path.empty()) sc = load_scene(o.scene_path);
  if (!o.hand_path.empty()) sc.hand = o.hand_path;
  if (sc.hand.empty()) throw ValidationError("no hand spec: pass --scene or --hand");
  if (o.mode) sc.settings.mode = *o.mode == "ke" ? PlanMode::KineticEfficiency : PlanMode::Regular;
  if (o.batch) sc.settings.batch = *o.batch;
  if (o.trials) sc.settings.trials = *o.trials;
  if (o.grid) sc.settings.grid = *o.grid;
  if (o.restarts) sc.settings.restarts = *o.restarts;
  if (o.seed) sc.settings.seed = *o.seed;
  return sc;
}

fs::path resolve_out(const CommonOpts& o) {
  fs::path dir = o.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("HANDSPAN_OUT");
    dir = env ? env : "out";
  }
  fs::create_directories(dir);
  return dir;
}

std::uint64_t require_seed(const SceneDocument& sc, const char* command) {
  if (!sc.settings.seed)
    throw ValidationError(std::string(command) + " requires a seed (--seed or scene settings)");
  return *sc.settings.seed;
}

int run_analyze(const CommonOpts& o, double distance) {
  const SceneDocument sc = resolve_scene(o);
  const HandModel model = load_hand_model(sc.hand);
  const ReachabilityMap map = build_reachability_map(model, {}, sc.settings.grid);
  const fs::path out = resolve_out(o);

  export_capacity_csv(map, model, (out / "capacity.csv").string());
  export_collision_csv(map.collision_map, model, (out / "collision.csv").string());
  export_reachable_meshes(map, model, (out / "meshes").string());

  // Permissive opposition spaces for the requested grasp distance,
  // upper-triangular by link id.
  std::string csv = "link_i,link_j,cap_min,cap_max\n";
  int permissive = 0;
  for (const OppositionSpace& os : map.os_set)
    if (is_geometrically_permissive(os, distance)) {
      char row[160];
      std::snprintf(row, sizeof(row), "%s,%s,%.17g,%.17g\n",
                    model.links[os.link_i].name.c_str(), model.links[os.link_j].name.c_str(),
                    os.cap_min, os.cap_max);
      csv += row;
      ++permissive;
    }
  write_text_file((out / "permissive.csv").string(), csv);
  std::printf("opposition spaces: %zu total, %d permissive at d=%g\n", map.os_set.size(),
              permissive, distance);
  std::printf("artifacts: %s\n", out.string().c_str());
  return 0;
}

// One grasp for the first scene object under the configured condition.
int run_grasp(const CommonOpts& o) {
  const SceneDocument sc = resolve_scene(o);
  if (sc.objects.empty()) throw ValidationError("scene has no objects");
  const HandModel model = load_hand_model(sc.hand);
  const ObjectModel& object = sc.objects.front();
  const ReachabilityMap map = build_reachability_map(model, {}, sc.settings.grid);
  Rng rng(sc.settings.seed.value_or(0));

  const double d = min_grasp_distance(object, sc.settings.mu);
  std::vector<OppositionSpace> candidates;
  ObjectiveMode obj_mode = ObjectiveMode::Single;
  if (sc.settings.mode == PlanMode::KineticEfficiency) {
    candidates = select_os_candidates(map.os_set, d, sc.settings.batch);
    obj_mode = ObjectiveMode::KineticEfficiency;
  } else {
    candidates.push_back(select_random_permissive(map.os_set, d, rng));
  }

  const SynthesisOutcome out_s =
      synthesize_grasp(model, map, candidates, object, {}, {}, sc.settings.weights(), obj_mode,
                       sc.settings.solve_settings(), rng);
  const fs::path out = resolve_out(o);
  const fs::path report = out / ("grasp_" + object.id + ".json");
  write_text_file(report.string(), grasp_report(sc.settings, model, out_s.best));
  ObjectModel placed = object;
  placed.center = out_s.best.object_center;
  placed.orientation = out_s.best.object_orientation;
  export_scene_obj(model, out_s.best.hand_configuration, {placed},
                   (out / ("grasp_" + object.id + ".obj")).string());
  const KEMetric ke = kinematic_efficiency(out_s.best);
  std::printf("grasped %s via %s-%s  objective %.6g  n_q %d  eta %.3f\n", object.id.c_str(),
              model.links[out_s.best.os.link_i].name.c_str(),
              model.links[out_s.best.os.link_j].name.c_str(), out_s.best.objective, ke.n_q,
              ke.eta);
  std::printf("report: %s\n", report.string().c_str());
  return 0;
}

void print_plan(const HandModel& model, const SequencePlan& plan) {
  for (const PlanStep& s : plan.steps) {
    if (s.success)
      std::printf("  %s: grasped via %s-%s  n_q %d  eta %.3f  (%.1fs)\n", s.object_id.c_str(),
                  model.links[s.solution.os.link_i].name.c_str(),
                  model.links[s.solution.os.link_j].name.c_str(), s.ke.n_q, s.ke.eta,
                  s.solve_seconds);
    else
      std::printf("  %s: skipped (no feasible grasp)\n", s.object_id.c_str());
  }
  std::printf("grasped %d/%zu objects, sequence cost %.6g\n", plan.n_grasped, plan.steps.size(),
              plan.sequence_cost);
}

int run_sequence(const CommonOpts& o, bool greedy) {
  const SceneDocument sc = resolve_scene(o);
  if (sc.objects.empty()) throw ValidationError("scene has no objects");
  const HandModel model = load_hand_model(sc.hand);
  Rng rng(sc.settings.seed.value_or(0));

  const SequencePlan plan =
      greedy ? plan_greedy(model, sc.objects, sc.settings.mode, sc.settings.batch,
                           sc.settings.weights(), sc.settings.solve_settings(), sc.settings.grid,
                           rng)
             : plan_sequential(model, sc.objects, sc.settings.mode, sc.settings.batch,
                               sc.settings.weights(), sc.settings.solve_settings(),
                               sc.settings.grid, rng);
  const fs::path out = resolve_out(o);
  const fs::path report = out / (greedy ? "greedy.json" : "sequence.json");
  write_text_file(report.string(), sequence_report(sc.settings, model, plan));

  std::vector<ObjectModel> posed;
  JointConfiguration config;
  for (const auto& [obj, sol] : plan.final_state.grasped) {
    posed.push_back(obj);
    config = sol.hand_configuration;
  }
  if (!posed.empty())
    export_scene_obj(model, config, posed,
                     (out / (greedy ? "greedy.obj" : "sequence.obj")).string());
  print_plan(model, plan);
  std::printf("report: %s\n", report.string().c_str());
  return 0;
}

int run_campaign_cmd(const CommonOpts& o) {
  const SceneDocument sc = resolve_scene(o);
  if (sc.objects.empty()) throw ValidationError("scene has no objects");
  const HandModel model = load_hand_model(sc.hand);
  Rng rng(require_seed(sc, "campaign"));

  const CampaignStats stats =
      run_campaign(model, sc.objects, sc.settings.trials, sc.settings.mode, sc.settings.batch,
                   sc.settings.weights(), sc.settings.solve_settings(), sc.settings.grid, rng);
  const fs::path out = resolve_out(o);
  write_text_file((out / "campaign.json").string(), campaign_report(sc.settings, stats));
  write_text_file((out / "campaign.csv").string(), campaign_csv(stats));

  for (std::size_t s = 0; s < stats.per_step.size(); ++s) {
    const CampaignStepStats& st = stats.per_step[s];
    std::printf("step %zu: success %d/%d (%.1f%%)  n_q %.2f±%.2f  eta %.2f±%.2f\n", s + 1,
                st.successes, st.attempts, 100.0 * st.success_rate, st.mean_n_q, st.std_n_q,
                st.mean_eta, st.std_eta);
  }
  std::printf("total solve time %.1fs over %d trials\n", stats.total_solve_seconds, stats.trials);
  std::printf("artifacts: %s\n", out.string().c_str());
  return 0;
}

int run_audit(const CommonOpts& o, const std::string& report_path) {
  const SceneDocument sc = resolve_scene(o);
  const HandModel model = load_hand_model(sc.hand);
  const PersistedGrasp pg = read_grasp_report(report_path);

  const ObjectModel* object = nullptr;
  for (const ObjectModel& obj : sc.objects)
    if (obj.id == pg.object_id) object = &obj;
  if (!object) throw ValidationError("scene has no object named '" + pg.object_id + "'");

  const ReachabilityMap map = build_reachability_map(model, {}, sc.settings.grid);
  const int id_a = model.link_id(pg.os_i), id_b = model.link_id(pg.os_j);
  const auto [i, j] = std::minmax(id_a, id_b);
  const OppositionSpace* os = nullptr;
  for (const OppositionSpace& cand : map.os_set)
    if (cand.link_i == i && cand.link_j == j) os = &cand;
  if (!os)
    throw ValidationError("report names opposition space " + pg.os_i + "-" + pg.os_j +
                          " which the hand does not admit");

  const ObjectiveMode mode = sc.settings.mode == PlanMode::KineticEfficiency
                                 ? ObjectiveMode::KineticEfficiency
                                 : ObjectiveMode::Single;
  const GraspProblem problem =
      assemble_problem(model, map, *os, *object, {}, {}, sc.settings.weights(), mode);
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(pg.x.data(), pg.x.size());
  GraspSolution sol = reconstruct_solution(problem, x);

  if (std::abs(sol.objective - pg.objective) > 1e-9 * std::max(1.0, std::abs(pg.objective)))
    throw ValidationError("persisted objective " + std::to_string(pg.objective) +
                          " does not match recomputation " + std::to_string(sol.objective));
  if (std::abs(sol.max_violation - pg.max_violation) > 1e-9)
    throw ValidationError("persisted violation does not match recomputation");
  const double v = audit_solution(problem, sol);
  std::printf("audit passed: %s via %s-%s, max violation %.3g\n", pg.object_id.c_str(),
              pg.os_i.c_str(), pg.os_j.c_str(), v);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-contact grasp planning over hand kinematic redundancy"};
  app.require_subcommand(1);

  CommonOpts o;
  double analyze_distance = 20.0;
  std::string audit_report;

  CLI::App* analyze = app.add_subcommand(
      "analyze", "reachability, opposition-space, and collision maps as CSV + meshes");
  add_common(analyze, o, false);
  analyze->add_option("--distance", analyze_distance, "grasp distance for the permissive set");

  CLI::App* grasp = app.add_subcommand("grasp", "synthesize one grasp for the first scene object");
  add_common(grasp, o, true);

  CLI::App* sequence =
      app.add_subcommand("sequence", "plan sequential grasps of the scene objects in order");
  add_common(sequence, o, true);

  CLI::App* greedy =
      app.add_subcommand("greedy", "order-exploring sequential planning, best order kept");
  add_common(greedy, o, true);

  CLI::App* campaign =
      app.add_subcommand("campaign", "repeated random-draw trials with per-step statistics");
  add_common(campaign, o, true);

  CLI::App* audit = app.add_subcommand("audit", "recheck a persisted grasp report");
  add_common(audit, o, true);
  audit->add_option("--report", audit_report, "grasp report to recheck")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) return run_analyze(o, analyze_distance);
    if (grasp->parsed()) return run_grasp(o);
    if (sequence->parsed()) return run_sequence(o, false);
    if (greedy->parsed()) return run_sequence(o, true);
    if (campaign->parsed()) return run_campaign_cmd(o);
    if (audit->parsed()) return run_audit(o, audit_report);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "{\"error\": \"%s\"}\n", e.what());
    return 1;
  }
  return 0;
}
