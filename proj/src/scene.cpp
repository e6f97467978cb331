#include "handspan/scene.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace handspan {

using nlohmann::json;

namespace {

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError("malformed JSON in '" + path + "': " + e.what());
  }
}

double positive_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key) || !j[key].is_number())
    throw ValidationError(where + "." + key + " must be a number");
  const double v = j[key].get<double>();
  if (!(v > 0)) throw ValidationError(where + "." + key + " must be positive");
  return v;
}

Eigen::Vector3d vec3_field(const json& j, const std::string& key, const std::string& where) {
  const json& a = j.at(key);
  if (!a.is_array() || a.size() != 3)
    throw ValidationError(where + "." + key + " must be a 3-element array");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

ObjectPart parse_part(const json& jp, const std::string& where) {
  ObjectPart part;
  const std::string shape = jp.value("shape", "");
  if (shape == "sphere") {
    part.shape = SphereShape{positive_number(jp, "r", where)};
  } else if (shape == "cylinder") {
    part.shape = CylinderShape{positive_number(jp, "r", where), positive_number(jp, "h", where)};
  } else {
    throw ValidationError(where + ".shape must be 'sphere' or 'cylinder'");
  }
  if (jp.contains("center")) part.local.translation() = vec3_field(jp, "center", where);
  if (jp.contains("axis_rpy_deg")) {
    const Eigen::Vector3d rpy = vec3_field(jp, "axis_rpy_deg", where) * (M_PI / 180.0);
    part.local.linear() = (Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
                           Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
                           Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()))
                              .toRotationMatrix();
  }
  return part;
}

ObjectModel parse_object(const json& jo, const std::string& where) {
  ObjectModel obj;
  obj.id = jo.value("id", "");
  if (obj.id.empty()) throw ValidationError(where + ".id is required");
  if (jo.contains("parts")) {
    const json& parts = jo["parts"];
    if (!parts.is_array() || parts.empty())
      throw ValidationError(where + ".parts must be a non-empty array");
    for (size_t k = 0; k < parts.size(); ++k)
      obj.parts.push_back(parse_part(parts[k], where + ".parts[" + std::to_string(k) + "]"));
    if (!jo.contains("contact_part"))
      throw ValidationError(where + ".contact_part is required for multi-part objects");
    obj.contact_part = jo["contact_part"].get<int>();
    if (obj.contact_part < 0 || obj.contact_part >= static_cast<int>(obj.parts.size()))
      throw ValidationError(where + ".contact_part is out of range");
  } else {
    obj.parts.push_back(parse_part(jo, where));
  }
  if (jo.contains("center")) obj.center = vec3_field(jo, "center", where);
  if (jo.contains("quat_wxyz")) {
    const json& q = jo["quat_wxyz"];
    if (!q.is_array() || q.size() != 4)
      throw ValidationError(where + ".quat_wxyz must be a 4-element array");
    obj.orientation = Eigen::Quaterniond(q[0].get<double>(), q[1].get<double>(),
                                         q[2].get<double>(), q[3].get<double>())
                          .normalized();
  }
  return obj;
}

std::vector<ObjectModel> parse_objects(const json& doc, const std::string& where) {
  if (!doc.contains("objects") || !doc["objects"].is_array())
    throw ValidationError(where + ".objects must be an array");
  std::vector<ObjectModel> out;
  for (size_t k = 0; k < doc["objects"].size(); ++k) {
    const std::string path = where + ".objects[" + std::to_string(k) + "]";
    ObjectModel obj = parse_object(doc["objects"][k], path);
    for (const ObjectModel& prior : out)
      if (prior.id == obj.id) throw ValidationError(path + ".id duplicates '" + obj.id + "'");
    out.push_back(std::move(obj));
  }
  return out;
}

PlannerSettings parse_settings(const json& doc) {
  PlannerSettings s;
  if (!doc.contains("settings")) return s;
  const json& j = doc["settings"];
  if (j.contains("mode")) {
    const std::string m = j["mode"].get<std::string>();
    if (m == "single") s.mode = PlanMode::Regular;
    else if (m == "ke") s.mode = PlanMode::KineticEfficiency;
    else throw ValidationError("settings.mode must be 'single' or 'ke'");
  }
  s.batch = j.value("batch", s.batch);
  s.lambda = j.value("lambda", s.lambda);
  s.mu = j.value("mu", s.mu);
  s.n_f = j.value("n_f", s.n_f);
  s.grid = j.value("grid", s.grid);
  s.restarts = j.value("restarts", s.restarts);
  s.trials = j.value("trials", s.trials);
  if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
  if (s.batch < 1) throw ValidationError("settings.batch must be at least 1");
  if (s.lambda < 0 || s.lambda > 1) throw ValidationError("settings.lambda must be in [0, 1]");
  if (s.mu <= 0) throw ValidationError("settings.mu must be positive");
  if (s.n_f < 3) throw ValidationError("settings.n_f must be at least 3");
  if (s.grid < 2) throw ValidationError("settings.grid must be at least 2");
  if (s.restarts < 1) throw ValidationError("settings.restarts must be at least 1");
  if (s.trials < 1) throw ValidationError("settings.trials must be at least 1");
  return s;
}

json vec3_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

json settings_json(const PlannerSettings& s) {
  json j;
  j["mode"] = s.mode == PlanMode::KineticEfficiency ? "ke" : "single";
  j["batch"] = s.batch;
  j["lambda"] = s.lambda;
  j["mu"] = s.mu;
  j["n_f"] = s.n_f;
  j["grid"] = s.grid;
  j["restarts"] = s.restarts;
  if (s.seed) j["seed"] = *s.seed;
  j["trials"] = s.trials;
  return j;
}

json solution_json(const HandModel& model, const GraspSolution& sol) {
  json j;
  j["object"] = sol.object_id;
  j["os"] = json::array(
      {model.link(sol.os.link_i).name, model.link(sol.os.link_j).name});
  j["cap_min"] = sol.os.cap_min;
  j["cap_max"] = sol.os.cap_max;
  j["objective"] = sol.objective;
  j["max_violation"] = sol.max_violation;
  j["cost_antipodality"] = sol.costs.c_f;
  j["cost_torque"] = sol.costs.c_t;
  j["cost_joint"] = sol.costs.c_q;
  j["eta"] = sol.costs.eta;
  j["kappa"] = sol.costs.kappa;
  j["engaged_joints"] = sol.costs.n_q;
  j["contact_distance"] = sol.contact_distance;
  j["object_center"] = vec3_json(sol.object_center);
  j["object_quat_wxyz"] =
      json::array({sol.object_orientation.w(), sol.object_orientation.x(),
                   sol.object_orientation.y(), sol.object_orientation.z()});
  for (int c = 0; c < 2; ++c) {
    json jc;
    const ContactParam& cp = sol.contact_params[c];
    jc["link"] = model.link(cp.link).name;
    if (model.link(cp.link).is_palm()) {
      jc["ux"] = cp.ux;
      jc["uy"] = cp.uy;
    } else {
      jc["alpha"] = cp.alpha;
      jc["phi"] = cp.phi;
    }
    jc["position"] = vec3_json(sol.contact_frames[c].p.value());
    jc["normal"] = vec3_json(sol.contact_frames[c].normal.value());
    j["contacts"].push_back(jc);
  }
  j["hand_angles"] = sol.hand_configuration.angles;
  j["closure_coefficients"] = sol.closure_coefficients;
  j["decision_vector"] = std::vector<double>(sol.x.data(), sol.x.data() + sol.x.size());
  return j;
}

json plan_json(const HandModel& model, const SequencePlan& plan) {
  json j;
  j["order"] = plan.order;
  j["n_grasped"] = plan.n_grasped;
  j["sequence_cost"] = plan.sequence_cost;
  for (const PlanStep& step : plan.steps) {
    json js;
    js["object"] = step.object_id;
    js["success"] = step.success;
    js["candidates_tried"] = step.candidates_tried;
    js["solve_seconds"] = step.solve_seconds;
    if (step.success) {
      js["solution"] = solution_json(model, step.solution);
      js["kappa"] = step.ke.kappa;
      js["eta"] = step.ke.eta;
      js["n_q"] = step.ke.n_q;
    }
    j["steps"].push_back(js);
  }
  return j;
}

std::string csv_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void append_cylinder_mesh(std::ostringstream& v, std::ostringstream& f, int& base,
                          const Eigen::Isometry3d& frame, double r, double x0, double x1) {
  const int n = 16;
  for (double x : {x0, x1})
    for (int k = 0; k < n; ++k) {
      const double a = 2.0 * M_PI * k / n;
      const Eigen::Vector3d p = frame * Eigen::Vector3d(x, r * std::sin(a), r * std::cos(a));
      v << "v " << p.x() << " " << p.y() << " " << p.z() << "\n";
    }
  for (int k = 0; k < n; ++k) {
    const int a = base + k, b = base + (k + 1) % n;
    const int c = a + n, d = b + n;
    f << "f " << a << " " << b << " " << d << "\n";
    f << "f " << a << " " << d << " " << c << "\n";
  }
  base += 2 * n;
}

void append_sphere_mesh(std::ostringstream& v, std::ostringstream& f, int& base,
                        const Eigen::Vector3d& c, double r) {
  const int nu = 12, nv = 8;
  for (int i = 0; i <= nv; ++i) {
    const double th = M_PI * i / nv;
    for (int k = 0; k < nu; ++k) {
      const double ph = 2.0 * M_PI * k / nu;
      Eigen::Vector3d p =
          c + r * Eigen::Vector3d(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph),
                                  std::cos(th));
      v << "v " << p.x() << " " << p.y() << " " << p.z() << "\n";
    }
  }
  for (int i = 0; i < nv; ++i)
    for (int k = 0; k < nu; ++k) {
      const int a = base + i * nu + k;
      const int b = base + i * nu + (k + 1) % nu;
      const int c2 = a + nu, d = b + nu;
      f << "f " << a << " " << b << " " << d << "\n";
      f << "f " << a << " " << d << " " << c2 << "\n";
    }
  base += nu * (nv + 1);
}

}  // namespace

SceneDocument load_scene(const std::string& path) {
  const json doc = parse_file(path);
  SceneDocument scene;
  if (!doc.contains("hand") || !doc["hand"].is_string())
    throw ValidationError("scene.hand must be a hand-spec path");
  scene.hand = doc["hand"].get<std::string>();
  // resolve the hand path relative to the scene file
  const std::filesystem::path base = std::filesystem::path(path).parent_path();
  if (!scene.hand.empty() && !std::filesystem::path(scene.hand).is_absolute() &&
      !std::filesystem::exists(scene.hand) && std::filesystem::exists(base / scene.hand))
    scene.hand = (base / scene.hand).string();
  scene.objects = parse_objects(doc, "scene");
  scene.settings = parse_settings(doc);
  return scene;
}

std::vector<ObjectModel> load_object_catalog(const std::string& path) {
  return parse_objects(parse_file(path), "catalog");
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
}

std::string grasp_report(const PlannerSettings& settings, const HandModel& model,
                         const GraspSolution& solution) {
  json j;
  j["settings"] = settings_json(settings);
  j["grasp"] = solution_json(model, solution);
  return j.dump(2) + "\n";
}

std::string sequence_report(const PlannerSettings& settings, const HandModel& model,
                            const SequencePlan& plan) {
  json j;
  j["settings"] = settings_json(settings);
  j["plan"] = plan_json(model, plan);
  return j.dump(2) + "\n";
}

std::string campaign_report(const PlannerSettings& settings, const CampaignStats& stats) {
  json j;
  j["settings"] = settings_json(settings);
  j["mode"] = stats.mode == PlanMode::KineticEfficiency ? "ke" : "single";
  j["trials"] = stats.trials;
  for (size_t s = 0; s < stats.per_step.size(); ++s) {
    const CampaignStepStats& agg = stats.per_step[s];
    json js;
    js["step"] = s;
    js["attempts"] = agg.attempts;
    js["successes"] = agg.successes;
    js["success_rate"] = agg.success_rate;
    js["mean_n_q"] = agg.mean_n_q;
    js["std_n_q"] = agg.std_n_q;
    js["mean_eta"] = agg.mean_eta;
    js["std_eta"] = agg.std_eta;
    j["per_step"].push_back(js);
  }
  return j.dump(2) + "\n";
}

std::string campaign_csv(const CampaignStats& stats) {
  std::ostringstream os;
  os << "trial,step,object,success,os,n_q,eta,kappa,sequence_cost,solve_seconds\n";
  for (const CampaignTrialRow& r : stats.rows) {
    os << r.trial << "," << r.step << "," << r.object_id << "," << (r.success ? 1 : 0) << ","
       << r.os_pair << "," << r.n_q << "," << csv_num(r.eta) << "," << csv_num(r.kappa) << ","
       << csv_num(r.sequence_cost) << "," << csv_num(r.solve_seconds) << "\n";
  }
  return os.str();
}

PersistedGrasp read_grasp_report(const std::string& path) {
  const json doc = parse_file(path);
  if (!doc.contains("grasp")) throw ValidationError("report.grasp section missing");
  const json& g = doc["grasp"];
  PersistedGrasp p;
  p.object_id = g.value("object", "");
  p.os_i = g.at("os")[0].get<std::string>();
  p.os_j = g.at("os")[1].get<std::string>();
  p.x = g.at("decision_vector").get<std::vector<double>>();
  p.objective = g.value("objective", 0.0);
  p.max_violation = g.value("max_violation", 0.0);
  return p;
}

void export_scene_obj(const HandModel& model, const JointConfiguration& config,
                      const std::vector<ObjectModel>& objects, const std::string& path) {
  std::ostringstream v, f;
  int base = 1;
  std::vector<Transform<double>> frames = model.link_frames(config.angles);
  for (const Link& l : model.links) {
    if (l.is_palm()) {
      // palm cuboid from the mid-plane rectangle and half thickness
      const Rectangle3& r = model.palm_midplane;
      const double hz = l.surface_radius();
      for (int sz : {-1, 1})
        for (int sy : {-1, 1})
          for (int sx : {-1, 1}) {
            const Eigen::Vector3d p = r.center + sx * r.hx * r.ax + sy * r.hy * r.ay +
                                      sz * hz * r.normal;
            v << "v " << p.x() << " " << p.y() << " " << p.z() << "\n";
          }
      const int q[6][4] = {{0, 1, 3, 2}, {4, 6, 7, 5}, {0, 4, 5, 1},
                           {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 5, 7, 3}};
      for (const auto& s : q) {
        f << "f " << base + s[0] << " " << base + s[1] << " " << base + s[2] << "\n";
        f << "f " << base + s[0] << " " << base + s[2] << " " << base + s[3] << "\n";
      }
      base += 8;
    } else {
      append_cylinder_mesh(v, f, base, frames[l.id].value(), l.surface_radius(), 0.0,
                           l.axial_length());
    }
  }
  for (const ObjectModel& obj : objects) {
    const Eigen::Isometry3d pose = obj.pose();
    for (const ObjectPart& part : obj.parts) {
      const Eigen::Isometry3d pf = pose * part.local;
      if (auto* cyl = std::get_if<CylinderShape>(&part.shape))
        append_cylinder_mesh(v, f, base, pf, cyl->r, -cyl->h * 0.5, cyl->h * 0.5);
      else
        append_sphere_mesh(v, f, base, pf.translation(),
                           std::get<SphereShape>(part.shape).r);
    }
  }
  write_text_file(path, "# scene mesh\n" + v.str() + f.str());
}

}  // namespace handspan
