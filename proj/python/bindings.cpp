// Python bindings for the core pipeline: model loading, reachability
// analysis, grasp synthesis, planning, and the efficiency metric.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "handspan/planner.hpp"
#include "handspan/scene.hpp"

namespace py = pybind11;
using namespace handspan;

namespace {

py::dict solution_dict(const HandModel& model, const GraspSolution& s) {
  py::dict d;
  d["object_id"] = s.object_id;
  d["os"] = py::make_tuple(model.links[s.os.link_i].name, model.links[s.os.link_j].name);
  d["objective"] = s.objective;
  d["max_violation"] = s.max_violation;
  d["feasible"] = s.feasible;
  d["x"] = std::vector<double>(s.x.data(), s.x.data() + s.x.size());
  d["joint_angles"] = s.hand_configuration.angles;
  d["object_center"] = std::vector<double>{s.object_center.x(), s.object_center.y(),
                                           s.object_center.z()};
  d["contact_distance"] = s.contact_distance;
  const KEMetric ke = kinematic_efficiency(s);
  d["n_q"] = ke.n_q;
  d["eta"] = ke.eta;
  d["kappa"] = ke.kappa;
  return d;
}

py::dict step_dict(const HandModel& model, const PlanStep& s) {
  py::dict d;
  d["object_id"] = s.object_id;
  d["success"] = s.success;
  d["candidates_tried"] = s.candidates_tried;
  d["solve_seconds"] = s.solve_seconds;
  if (s.success) d["solution"] = solution_dict(model, s.solution);
  return d;
}

PlanMode parse_mode(const std::string& mode) {
  if (mode == "single") return PlanMode::Regular;
  if (mode == "ke") return PlanMode::KineticEfficiency;
  throw ValidationError("mode must be 'single' or 'ke'");
}

}  // namespace

PYBIND11_MODULE(_handspan, m) {
  m.doc() = "multi-contact grasp planning over hand kinematic redundancy";

  py::class_<HandModel>(m, "HandModel")
      .def_property_readonly("name", [](const HandModel& h) { return h.name; })
      .def_property_readonly("dof", [](const HandModel& h) { return h.joints.size(); })
      .def_property_readonly("link_names",
                             [](const HandModel& h) {
                               std::vector<std::string> names;
                               for (const auto& l : h.links) names.push_back(l.name);
                               return names;
                             })
      .def("link_id", &HandModel::link_id);

  py::class_<ObjectModel>(m, "ObjectModel")
      .def_property_readonly("id", [](const ObjectModel& o) { return o.id; })
      .def_property_readonly("num_parts", [](const ObjectModel& o) { return o.parts.size(); })
      .def_property_readonly("contact_part", [](const ObjectModel& o) { return o.contact_part; });

  py::class_<ReachabilityMap>(m, "ReachabilityMap")
      .def_property_readonly("num_opposition_spaces",
                             [](const ReachabilityMap& r) { return r.os_set.size(); })
      .def("opposition_spaces", [](const ReachabilityMap& r, const HandModel& h) {
        py::list out;
        for (const OppositionSpace& os : r.os_set) {
          py::dict d;
          d["links"] = py::make_tuple(h.links[os.link_i].name, h.links[os.link_j].name);
          d["cap_min"] = os.cap_min;
          d["cap_max"] = os.cap_max;
          out.append(d);
        }
        return out;
      });

  m.def("load_hand_model", &load_hand_model, py::arg("path"));
  m.def("load_object_catalog", &load_object_catalog, py::arg("path"));
  m.def(
      "make_sphere",
      [](const std::string& id, double r) {
        ObjectModel o;
        o.id = id;
        o.parts.push_back({SphereShape{r}, Eigen::Isometry3d::Identity()});
        return o;
      },
      py::arg("id"), py::arg("r"));
  m.def(
      "make_cylinder",
      [](const std::string& id, double r, double h) {
        ObjectModel o;
        o.id = id;
        o.parts.push_back({CylinderShape{r, h}, Eigen::Isometry3d::Identity()});
        return o;
      },
      py::arg("id"), py::arg("r"), py::arg("h"));

  m.def(
      "build_reachability_map",
      [](const HandModel& model, int grid) { return build_reachability_map(model, {}, grid); },
      py::arg("model"), py::arg("grid") = 9);

  m.def(
      "kinematic_efficiency",
      [](int n_c, int n_q, double eta) {
        const KEMetric ke = kinematic_efficiency(n_c, n_q, eta);
        py::dict d;
        d["n_c"] = ke.n_c;
        d["n_q"] = ke.n_q;
        d["eta"] = ke.eta;
        d["kappa"] = ke.kappa;
        return d;
      },
      py::arg("n_c"), py::arg("n_q"), py::arg("eta"));

  m.def(
      "synthesize_grasp",
      [](const HandModel& model, const ReachabilityMap& map, const ObjectModel& object,
         const std::string& mode, int batch, double mu, double lam, int n_f, int restarts,
         std::uint64_t seed) {
        GraspWeights w;
        w.mu = mu;
        w.lambda = lam;
        w.n_f = n_f;
        SolveSettings st;
        st.restarts = restarts;
        Rng rng(seed);
        const double d = min_grasp_distance(object, mu);
        std::vector<OppositionSpace> candidates;
        ObjectiveMode obj_mode = ObjectiveMode::Single;
        if (parse_mode(mode) == PlanMode::KineticEfficiency) {
          candidates = select_os_candidates(map.os_set, d, batch);
          obj_mode = ObjectiveMode::KineticEfficiency;
        } else {
          candidates.push_back(select_random_permissive(map.os_set, d, rng));
        }
        const SynthesisOutcome out =
            synthesize_grasp(model, map, candidates, object, {}, {}, w, obj_mode, st, rng);
        return solution_dict(model, out.best);
      },
      py::arg("model"), py::arg("map"), py::arg("object"), py::arg("mode") = "single",
      py::arg("batch") = 3, py::arg("mu") = 0.5, py::arg("lam") = 0.5, py::arg("n_f") = 3,
      py::arg("restarts") = 8, py::arg("seed") = 0);

  m.def(
      "plan_sequential",
      [](const HandModel& model, const std::vector<ObjectModel>& objects, const std::string& mode,
         int batch, int grid, int restarts, std::uint64_t seed) {
        GraspWeights w;
        SolveSettings st;
        st.restarts = restarts;
        Rng rng(seed);
        const SequencePlan plan =
            plan_sequential(model, objects, parse_mode(mode), batch, w, st, grid, rng);
        py::dict d;
        d["n_grasped"] = plan.n_grasped;
        d["sequence_cost"] = plan.sequence_cost;
        py::list steps;
        for (const PlanStep& s : plan.steps) steps.append(step_dict(model, s));
        d["steps"] = steps;
        return d;
      },
      py::arg("model"), py::arg("objects"), py::arg("mode") = "single", py::arg("batch") = 3,
      py::arg("grid") = 9, py::arg("restarts") = 8, py::arg("seed") = 0);

  py::register_exception<ValidationError>(m, "ValidationError");
  py::register_exception<NoPermissiveOS>(m, "NoPermissiveOS");
  py::register_exception<NoFeasibleGrasp>(m, "NoFeasibleGrasp");
}
