// Python bindings for the core operations: network construction, gain
// design, certification and closed-loop simulation.

#include <pybind11/pybind11.h>
#include <pybind11/eigen.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "tubegrid/certify.hpp"
#include "tubegrid/config.hpp"
#include "tubegrid/control.hpp"
#include "tubegrid/dynamics.hpp"
#include "tubegrid/network.hpp"
#include "tubegrid/sim.hpp"

namespace py = pybind11;
using namespace tubegrid;

namespace {

py::object json_to_py(const nlohmann::json& j) {
  py::module_ json_mod = py::module_::import("json");
  return json_mod.attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "tube-based voltage control for meshed ac microgrids";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<CplSingularity>(m, "CplSingularity");

  py::class_<NetworkModel>(m, "NetworkModel")
      .def(py::init<>())
      .def_readwrite("nodes", &NetworkModel::nodes)
      .def_readwrite("edges", &NetworkModel::edges)
      .def_readwrite("capacitance", &NetworkModel::capacitance)
      .def_readwrite("line_resistance", &NetworkModel::line_resistance)
      .def_readwrite("line_inductance", &NetworkModel::line_inductance)
      .def_readwrite("grid_frequency", &NetworkModel::grid_frequency)
      .def_readwrite("rated_voltage", &NetworkModel::rated_voltage)
      .def_readwrite("load_p", &NetworkModel::load_p)
      .def_readwrite("load_q", &NetworkModel::load_q)
      .def_readwrite("dp_max", &NetworkModel::dp_max)
      .def_readwrite("dq_max", &NetworkModel::dq_max)
      .def_readwrite("v_center", &NetworkModel::v_center)
      .def_readwrite("v_max", &NetworkModel::v_max);

  py::class_<Network>(m, "Network")
      .def_readonly("model", &Network::model)
      .def_readonly("incidence", &Network::incidence)
      .def_readonly("laplacian", &Network::laplacian)
      .def("node_count", &Network::n)
      .def("edge_count", &Network::m);

  py::class_<GainSet>(m, "GainSet")
      .def(py::init<>())
      .def_readwrite("K", &GainSet::K)
      .def_readwrite("K_d", &GainSet::K_d)
      .def_readwrite("K_q", &GainSet::K_q)
      .def_readwrite("M", &GainSet::M)
      .def_readwrite("k_Id", &GainSet::k_Id)
      .def_readwrite("k_Iq", &GainSet::k_Iq)
      .def_readwrite("e_bar", &GainSet::e_bar)
      .def_readwrite("z_tilde_m", &GainSet::z_tilde_m)
      .def_readwrite("delta", &GainSet::delta);

  py::class_<ReferenceSchedule>(m, "ReferenceSchedule")
      .def(py::init<>())
      .def_readwrite("times", &ReferenceSchedule::times)
      .def_readwrite("values", &ReferenceSchedule::values)
      .def("at", &ReferenceSchedule::at, py::return_value_policy::copy);

  py::class_<DisturbanceProfile>(m, "DisturbanceProfile")
      .def(py::init<>())
      .def_readwrite("kind", &DisturbanceProfile::kind)
      .def_readwrite("dwell", &DisturbanceProfile::dwell)
      .def_readwrite("amplitude", &DisturbanceProfile::amplitude)
      .def_readwrite("seed", &DisturbanceProfile::seed);

  py::enum_<DisturbanceKind>(m, "DisturbanceKind")
      .value("zero", DisturbanceKind::zero)
      .value("square_wave", DisturbanceKind::square_wave)
      .value("random_steps", DisturbanceKind::random_steps)
      .value("sinusoid", DisturbanceKind::sinusoid);

  py::class_<SimOptions>(m, "SimOptions")
      .def(py::init<>())
      .def_readwrite("dt", &SimOptions::dt)
      .def_readwrite("t_end", &SimOptions::t_end)
      .def_readwrite("keep_every", &SimOptions::keep_every)
      .def_readwrite("allow_uncertified", &SimOptions::allow_uncertified);

  py::class_<Certificate>(m, "Certificate")
      .def_readonly("name", &Certificate::name)
      .def_readonly("pass_", &Certificate::pass)
      .def_readonly("informative", &Certificate::informative)
      .def_readonly("margin", &Certificate::margin)
      .def_property_readonly(
          "witness", [](const Certificate& c) { return json_to_py(c.witness); });

  py::class_<CertificateBundle>(m, "CertificateBundle")
      .def_readonly("certificates", &CertificateBundle::certificates)
      .def("all_pass", &CertificateBundle::all_pass)
      .def("to_dict",
           [](const CertificateBundle& b) { return json_to_py(b.to_json()); });

  py::class_<SimReport>(m, "SimReport")
      .def_readonly("diverged", &SimReport::diverged)
      .def_readonly("steps", &SimReport::steps)
      .def_readonly("min_barrier", &SimReport::min_barrier)
      .def_readonly("tube_max", &SimReport::tube_max)
      .def_readonly("excursion_max", &SimReport::excursion_max)
      .def_readonly("disk_violations", &SimReport::disk_violations)
      .def_readonly("sigma_clamp_max", &SimReport::sigma_clamp_max)
      .def_readonly("q_residual_max", &SimReport::q_residual_max)
      .def_readonly("settle_gap", &SimReport::settle_gap)
      .def("to_dict",
           [](const SimReport& r) { return json_to_py(r.to_json()); });

  py::class_<Trajectory>(m, "Trajectory")
      .def_readonly("times", &Trajectory::times)
      .def_readonly("z_tilde", &Trajectory::z_tilde)
      .def_readonly("e", &Trajectory::e)
      .def_readonly("sigma_d", &Trajectory::sigma_d)
      .def_readonly("sigma_q", &Trajectory::sigma_q)
      .def_readonly("v", &Trajectory::v)
      .def_readonly("barrier", &Trajectory::barrier)
      .def("samples", &Trajectory::samples)
      .def("nodes", &Trajectory::nodes);

  py::class_<ScenarioResult>(m, "ScenarioResult")
      .def_readonly("trajectory", &ScenarioResult::trajectory)
      .def_readonly("report", &ScenarioResult::report)
      .def_readonly("certificates", &ScenarioResult::certificates)
      .def_readonly("ran", &ScenarioResult::ran);

  py::class_<ModelComparison>(m, "ModelComparison")
      .def_readonly("times", &ModelComparison::times)
      .def_readonly("voltage_gap", &ModelComparison::voltage_gap)
      .def_readonly("transient_max", &ModelComparison::transient_max)
      .def_readonly("steady_state_gap", &ModelComparison::steady_state_gap)
      .def_readonly("diverged", &ModelComparison::diverged)
      .def_readonly("ran", &ModelComparison::ran);

  m.def("make_network", &make_network, py::arg("model"));
  m.def("cpl_current", &cpl_current, py::arg("v"), py::arg("p"), py::arg("q"));
  m.def("error_gain_requirement", &error_gain_requirement, py::arg("e_bar"),
        py::arg("z_d"), py::arg("p"), py::arg("q"), py::arg("dp_max"),
        py::arg("dq_max"));
  m.def("nominal_voltage_floor", &nominal_voltage_floor, py::arg("e_bar"));
  m.def("cpl_stability_bound", &cpl_stability_bound, py::arg("p"),
        py::arg("z_hat"));
  m.def(
      "design_gains",
      [](const Network& net, double e_bar, double z_tilde_m, double delta) {
        AutoDesignSpec spec;
        spec.e_bar = Eigen::VectorXd::Constant(net.n(), e_bar);
        spec.z_tilde_m = Eigen::VectorXd::Constant(net.n(), z_tilde_m);
        spec.delta = Eigen::VectorXd::Constant(net.n(), delta);
        DesignResult res = design_all(net, spec);
        return py::make_tuple(
            res.feasible() ? py::cast(*res.gains) : py::none(),
            py::cast(res.certificates));
      },
      py::arg("network"), py::arg("e_bar"), py::arg("z_tilde_m"),
      py::arg("delta"));
  m.def("certify", &certify_all, py::arg("network"), py::arg("gains"),
        py::arg("references"));
  m.def("run_scenario", &run_scenario, py::arg("network"), py::arg("gains"),
        py::arg("references"), py::arg("disturbance"), py::arg("options"));
  m.def("compare_models", &compare_models, py::arg("network"),
        py::arg("gains"), py::arg("references"), py::arg("disturbance"),
        py::arg("options"));
  m.def(
      "load_config_file",
      [](const std::string& path) {
        RunConfig cfg = load_config(path);
        Network net = make_network(cfg.network);
        ResolvedGains resolved = resolve_gains(net, cfg);
        return py::make_tuple(
            py::cast(net),
            resolved.gains ? py::cast(*resolved.gains) : py::none(),
            py::cast(cfg.references), py::cast(cfg.disturbance),
            py::cast(cfg.sim));
      },
      py::arg("path"),
      "Parse a config file and return (network, gains, references, "
      "disturbance, sim_options); gains is None when auto design is "
      "infeasible.");
}
