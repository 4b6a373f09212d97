#include <optional>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mrrl/checkpoint.hpp"
#include "mrrl/checks.hpp"
#include "mrrl/config.hpp"
#include "mrrl/environment.hpp"
#include "mrrl/runs.hpp"

namespace py = pybind11;
using namespace mrrl;

namespace {

RunConfig parse_config(const std::string& text) { return resolve_config(json::parse(text), 1, false); }

std::string metrics_text(const EvalMetrics& m) {
  return json{{"mean_distance_error", m.mean_distance_error},
              {"max_distance_error", m.max_distance_error},
              {"max_reference_error", m.max_reference_error},
              {"min_clearance", std::isfinite(m.min_clearance) ? json(m.min_clearance) : json(nullptr)},
              {"diverged", m.diverged},
              {"steps", m.steps}}
      .dump();
}

}  // namespace

PYBIND11_MODULE(_mrrl, m) {
  m.doc() = "Vessel tracking control with a baseline controller and a learned residual";

  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_ValueError);

  m.def("preset", [](int scenario, bool desk_scale) { return to_json(preset(scenario, desk_scale)).dump(); },
        py::arg("scenario"), py::arg("desk_scale") = false);
  m.def("resolve", [](const std::string& text) { return to_json(parse_config(text)).dump(); }, py::arg("config"));
  m.def("content_hash", &content_hash, py::arg("text"));

  m.def(
      "closest_approach",
      [](const Vec2& p_a, const Vec2& v_a, const Vec2& p_o, const Vec2& v_o) {
        Obstacle o;
        o.position = p_o;
        o.velocity = v_o;
        const ClosestApproach ca = closest_approach(p_a, v_a, o);
        return py::make_tuple(ca.distance, ca.closing);
      },
      py::arg("p_a"), py::arg("v_a"), py::arg("p_o"), py::arg("v_o"));

  m.def("verify", [](std::uint64_t seed) {
    py::list out;
    for (const Check& c : run_all_checks(seed)) {
      py::dict d;
      d["name"] = c.name;
      d["measured"] = c.measured;
      d["threshold"] = c.threshold;
      d["passed"] = c.passed;
      d["detail"] = c.detail;
      out.append(d);
    }
    return out;
  }, py::arg("seed") = 1);

  m.def(
      "train",
      [](const std::string& config, const std::filesystem::path& out) {
        const RunConfig cfg = parse_config(config);
        py::gil_scoped_release release;
        std::vector<std::string> finals;
        for (const SeedResult& r : run_train(cfg, out)) finals.push_back(r.final_checkpoint.string());
        return finals;
      },
      py::arg("config"), py::arg("out"));

  m.def(
      "evaluate",
      [](const std::string& config, std::optional<std::filesystem::path> checkpoint,
         const std::filesystem::path& out) {
        const RunConfig cfg = parse_config(config);
        py::gil_scoped_release release;
        return metrics_text(run_eval(cfg, checkpoint, out));
      },
      py::arg("config"), py::arg("checkpoint"), py::arg("out"));

  py::class_<Environment>(m, "Environment")
      .def(py::init([](const std::string& config, bool evaluation) {
             const RunConfig cfg = parse_config(config);
             return Environment(evaluation ? cfg.eval_env() : cfg.train_env());
           }),
           py::arg("config"), py::arg("evaluation") = false)
      .def("reset", [](Environment& e, std::uint64_t seed) -> Eigen::VectorXd { return e.reset(seed); },
           py::arg("seed"))
      .def(
          "step",
          [](Environment& e, const Vec2& u_l) {
            const StepResult r = e.step(u_l);
            return py::make_tuple(Eigen::VectorXd(r.obs), r.reward, r.done, r.diverged);
          },
          py::arg("u_l"))
      .def_property_readonly("time", &Environment::time)
      .def_property_readonly("plant_pose", [](const Environment& e) { return e.plant().eta; })
      .def_property_readonly("plant_velocity", [](const Environment& e) { return e.plant().nu; })
      .def_property_readonly("nominal_pose", [](const Environment& e) { return e.nominal().eta; })
      .def_property_readonly("reference_pose", [](const Environment& e) { return e.reference().eta; })
      .def_property_readonly("baseline_action", &Environment::baseline_action);

  m.attr("OBSERVATION_WIDTH") = kObservationWidth;
}
