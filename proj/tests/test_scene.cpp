#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "handspan/planner.hpp"
#include "handspan/scene.hpp"

using namespace handspan;

namespace {

std::string models_dir() {
  const char* env = std::getenv("HANDSPAN_MODELS");
  return env ? env : "models";
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

}  // namespace

TEST_CASE("object catalog parses all sixteen entries") {
  const auto pool = load_object_catalog(models_dir() + "/objects_16.json");
  REQUIRE(pool.size() == 16);

  int spheres = 0, cylinders = 0, composites = 0;
  for (const ObjectModel& o : pool) {
    CHECK(!o.id.empty());
    REQUIRE(!o.parts.empty());
    if (o.parts.size() > 1) {
      ++composites;
      CHECK(o.contact_part >= 0);
      CHECK(o.contact_part < static_cast<int>(o.parts.size()));
    } else if (std::holds_alternative<SphereShape>(o.parts[0].shape)) {
      ++spheres;
    } else {
      ++cylinders;
    }
  }
  CHECK(composites == 2);
  CHECK(spheres + cylinders == 14);

  // The two composites: a two-sphere dumbbell contacted on the smaller
  // sphere, and a three-cylinder bundle contacted on the middle cylinder.
  const ObjectModel& dumbbell = pool[14];
  REQUIRE(dumbbell.parts.size() == 2);
  CHECK(dumbbell.contact_part == 0);
  CHECK(std::holds_alternative<SphereShape>(dumbbell.parts[0].shape));

  const ObjectModel& bundle = pool[15];
  REQUIRE(bundle.parts.size() == 3);
  CHECK(bundle.contact_part == 1);
  for (const ObjectPart& p : bundle.parts)
    CHECK(std::holds_alternative<CylinderShape>(p.shape));
  CHECK(bundle.parts[1].radius() > bundle.parts[0].radius());
}

TEST_CASE("scene loads with defaults filled in") {
  const std::string path = temp_path("handspan_scene_min.json");
  write_file(path, "{\"hand\":\"" + models_dir() +
                       "/human_20dof.json\","
                       "\"objects\":[{\"id\":\"ball\",\"shape\":\"sphere\",\"r\":10.0}]}");
  const SceneDocument sc = load_scene(path);
  CHECK(sc.objects.size() == 1);
  CHECK(sc.objects[0].id == "ball");
  CHECK(sc.settings.mode == PlanMode::Regular);
  CHECK(sc.settings.mu == doctest::Approx(0.5));
  CHECK(sc.settings.lambda == doctest::Approx(0.5));
  CHECK(sc.settings.batch == 3);
  CHECK(sc.settings.n_f == 3);
  CHECK(!sc.settings.seed.has_value());
}

TEST_CASE("scene overrides settings and resolves the hand path") {
  const std::string path = temp_path("handspan_scene_full.json");
  write_file(path, "{\"hand\":\"" + models_dir() +
                       "/allegro_16dof.json\","
                       "\"objects\":[{\"id\":\"rod\",\"shape\":\"cylinder\",\"r\":9.0,\"h\":70.0}],"
                       "\"settings\":{\"mode\":\"ke\",\"batch\":5,\"mu\":0.8,"
                       "\"seed\":42,\"trials\":10}}");
  const SceneDocument sc = load_scene(path);
  CHECK(sc.settings.mode == PlanMode::KineticEfficiency);
  CHECK(sc.settings.batch == 5);
  CHECK(sc.settings.mu == doctest::Approx(0.8));
  REQUIRE(sc.settings.seed.has_value());
  CHECK(*sc.settings.seed == 42);
  CHECK(sc.settings.trials == 10);
  // The hand path must load as written in the document.
  CHECK_NOTHROW(load_hand_model(sc.hand));
}

TEST_CASE("scene validation errors name the offending field") {
  const std::string path = temp_path("handspan_scene_bad.json");

  write_file(path, "{\"hand\":\"h.json\",\"objects\":["
                   "{\"id\":\"x\",\"shape\":\"sphere\",\"r\":-3.0}]}");
  CHECK_THROWS_WITH_AS(load_scene(path), "scene.objects[0].r must be positive",
                       ValidationError);

  write_file(path, "{\"hand\":\"h.json\",\"objects\":["
                   "{\"id\":\"x\",\"shape\":\"cone\",\"r\":3.0}]}");
  CHECK_THROWS_AS(load_scene(path), ValidationError);

  write_file(path, "{\"objects\":[]}");
  CHECK_THROWS_AS(load_scene(path), ValidationError);
}

TEST_CASE("grasp report is deterministic and round-trips the solution") {
  const HandModel m = load_hand_model(models_dir() + "/human_20dof.json");
  const ReachabilityMap map = build_reachability_map(m, {}, 7);

  ObjectModel ball;
  ball.id = "ball";
  ball.parts.push_back({SphereShape{10.0}, Eigen::Isometry3d::Identity()});

  PlannerSettings ps;
  ps.restarts = 4;
  const double d = 2.0 * 10.0 * std::cos(std::atan(ps.mu));
  const auto cands = select_os_candidates(map.os_set, d, 3);
  REQUIRE(!cands.empty());

  Rng rng(77);
  const SynthesisOutcome out =
      synthesize_grasp(m, map, cands, ball, {}, {}, ps.weights(),
                       ObjectiveMode::Single, ps.solve_settings(), rng);
  REQUIRE(out.best.feasible);

  const std::string r1 = grasp_report(ps, m, out.best);
  const std::string r2 = grasp_report(ps, m, out.best);
  CHECK(r1 == r2);
  CHECK(r1.back() == '\n');

  const std::string path = temp_path("handspan_grasp.json");
  write_text_file(path, r1);
  CHECK(read_file(path) == r1);

  const PersistedGrasp pg = read_grasp_report(path);
  CHECK(pg.object_id == "ball");
  CHECK(pg.objective == out.best.objective);
  CHECK(pg.max_violation == out.best.max_violation);
  REQUIRE(pg.x.size() == static_cast<std::size_t>(out.best.x.size()));
  for (std::size_t i = 0; i < pg.x.size(); ++i) CHECK(pg.x[i] == out.best.x[i]);

  // The persisted pair names an opposition space of the map.
  const int ia = m.link_id(pg.os_i), ib = m.link_id(pg.os_j);
  const auto [lo, hi] = std::minmax(ia, ib);
  bool found = false;
  for (const OppositionSpace& os : map.os_set)
    if (os.link_i == lo && os.link_j == hi) found = true;
  CHECK(found);

  // Mesh export of the posed scene produces a non-trivial triangle mesh.
  const std::string obj_path = temp_path("handspan_scene.obj");
  export_scene_obj(m, out.best.hand_configuration, {ball}, obj_path);
  const std::string obj = read_file(obj_path);
  int nv = 0, nf = 0;
  for (std::size_t pos = 0; pos < obj.size();) {
    if (obj.compare(pos, 2, "v ") == 0) ++nv;
    if (obj.compare(pos, 2, "f ") == 0) ++nf;
    pos = obj.find('\n', pos);
    if (pos == std::string::npos) break;
    ++pos;
  }
  CHECK(nv > 100);
  CHECK(nf > 100);
}

TEST_CASE("campaign csv has one row per planning step") {
  CampaignStats cs;
  cs.trials = 2;
  for (int t = 0; t < 2; ++t)
    for (int s = 0; s < 3; ++s) {
      CampaignTrialRow row;
      row.trial = t;
      row.step = s;
      row.object_id = "O" + std::to_string(s + 1);
      row.success = (s != 2);
      cs.rows.push_back(row);
    }
  const std::string csv = campaign_csv(cs);
  const std::size_t rows = std::count(csv.begin(), csv.end(), '\n');
  CHECK(rows == 1 + 2 * 3);  // header plus one row per step
  CHECK(csv.rfind("trial,step,object,success,", 0) == 0);
}
