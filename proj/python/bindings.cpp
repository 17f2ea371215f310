#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ehn/config.hpp"
#include "ehn/experiments.hpp"
#include "ehn/simulator.hpp"

namespace py = pybind11;

namespace {

py::array_t<double> to_array(const ehn::Policy& p) {
  py::array_t<double> out({p.num_states(), ehn::kNumActions});
  auto v = out.mutable_unchecked<2>();
  for (std::size_t s = 0; s < p.num_states(); ++s)
    for (std::size_t a = 0; a < ehn::kNumActions; ++a) v(s, a) = p[s][a];
  return out;
}

ehn::Policy from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                       std::size_t num_states) {
  if (a.ndim() != 2 || static_cast<std::size_t>(a.shape(0)) != num_states ||
      a.shape(1) != static_cast<py::ssize_t>(ehn::kNumActions))
    throw py::value_error("policy must have shape (num_states, 3)");
  auto v = a.unchecked<2>();
  std::vector<std::array<double, ehn::kNumActions>> rows(num_states);
  for (std::size_t s = 0; s < num_states; ++s)
    for (std::size_t k = 0; k < ehn::kNumActions; ++k) rows[s][k] = v(s, k);
  ehn::Policy p(std::move(rows));
  p.validate();
  return p;
}

py::dict metrics_dict(const ehn::Metrics& m) {
  py::dict d;
  d["thr_lp"] = m.throughput_lp;
  d["thr_hp"] = m.throughput_hp;
  d["loss_lp"] = m.loss_lp;
  d["loss_hp"] = m.loss_hp;
  d["drop_lp"] = m.drop_lp;
  d["drop_hp"] = m.drop_hp;
  d["delay_lp"] = m.delay_lp;
  d["delay_hp"] = m.delay_hp;
  d["objective"] = m.objective;
  return d;
}

py::dict estimate(const ehn::Estimate& e) {
  py::dict d;
  d["mean"] = e.mean;
  d["se"] = e.std_error;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Energy harvesting node: model, constrained solver, evaluation and simulation";

  py::register_exception<ehn::ModelError>(m, "ModelError", PyExc_ValueError);
  py::register_exception<ehn::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<ehn::ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_readwrite("e_max", &ehn::ModelParams::e_max)
      .def_readwrite("q_lp_max", &ehn::ModelParams::q_lp_max)
      .def_readwrite("q_hp_max", &ehn::ModelParams::q_hp_max)
      .def_readwrite("k_tx", &ehn::ModelParams::k_tx)
      .def_readwrite("mu", &ehn::ModelParams::mu)
      .def_property(
          "harvest",
          [](const ehn::ModelParams& p) {
            std::vector<std::pair<int, double>> out;
            for (const auto& h : p.harvest) out.emplace_back(h.units, h.prob);
            return out;
          },
          [](ehn::ModelParams& p, const std::vector<std::pair<int, double>>& v) {
            p.harvest.clear();
            for (const auto& [u, pr] : v) p.harvest.push_back({u, pr});
          })
      .def_readwrite("arrival_lp", &ehn::ModelParams::arrival_lp)
      .def_readwrite("arrival_hp", &ehn::ModelParams::arrival_hp)
      .def_readwrite("weight_lp", &ehn::ModelParams::weight_lp)
      .def_readwrite("weight_hp", &ehn::ModelParams::weight_hp)
      .def_readwrite("loss_limit_lp", &ehn::ModelParams::loss_limit_lp)
      .def_readwrite("loss_limit_hp", &ehn::ModelParams::loss_limit_hp)
      .def("validate", &ehn::ModelParams::validate);

  py::class_<ehn::ExperimentConfig>(m, "ExperimentConfig")
      .def_readonly("model", &ehn::ExperimentConfig::model)
      .def_readonly("slots", &ehn::ExperimentConfig::slots)
      .def_readonly("warmup_slots", &ehn::ExperimentConfig::warmup_slots)
      .def_readonly("seed", &ehn::ExperimentConfig::seed)
      .def_readonly("sweep_weights", &ehn::ExperimentConfig::sweep_weights)
      .def_readonly("sweep_rates", &ehn::ExperimentConfig::sweep_rates)
      .def_readonly("out_dir", &ehn::ExperimentConfig::out_dir);

  m.def("parse_config", [](const std::string& text) { return ehn::parse_config(text); });

  m.def(
      "states",
      [](const ehn::ModelParams& p) {
        const ehn::StateSpace space(p);
        std::vector<std::tuple<int, int, int>> out;
        for (const auto& s : space.states()) out.emplace_back(s.e, s.q_lp, s.q_hp);
        return out;
      },
      "All states (e, q_lp, q_hp) in index order.");

  m.def(
      "transition",
      [](const ehn::ModelParams& p, std::tuple<int, int, int> s, int action) {
        if (action < 0 || action >= 3) throw py::value_error("action must be 0, 1 or 2");
        p.validate();
        std::vector<std::pair<std::tuple<int, int, int>, double>> out;
        for (const auto& [n, pr] : ehn::transition(
                 p, {std::get<0>(s), std::get<1>(s), std::get<2>(s)}, static_cast<ehn::Action>(action)))
          out.emplace_back(std::tuple{n.e, n.q_lp, n.q_hp}, pr);
        return out;
      },
      "Next-state distribution for action 0=harvest, 1=tx_lp, 2=tx_hp.");

  m.def(
      "solve",
      [](const ehn::ModelParams& p) {
        ehn::SolvedPoint point;
        {
          py::gil_scoped_release release;
          point = ehn::solve_point(p);
        }
        py::dict d;
        d["status"] = ehn::to_string(point.report.status);
        d["objective"] = point.report.objective;
        d["loss_lp"] = point.report.constraint_lp;
        d["loss_hp"] = point.report.constraint_hp;
        d["iterations"] = point.report.iterations;
        d["flow_residual"] = point.flow_residual;
        d["policy"] = point.policy ? py::object(to_array(*point.policy)) : py::none();
        d["metrics"] = point.metrics ? py::object(metrics_dict(*point.metrics)) : py::none();
        return d;
      },
      "Solve the constrained problem; returns status, report values, policy and metrics.");

  m.def("static_policy", [](const ehn::ModelParams& p) {
    return to_array(ehn::static_policy(ehn::StateSpace(p).size()));
  });

  m.def("evaluate", [](const ehn::ModelParams& p, const py::array_t<double>& policy) {
    const auto model = ehn::build_model(p);
    return metrics_dict(ehn::evaluate_policy(model, from_array(policy, model.num_states())));
  });

  m.def(
      "simulate",
      [](const ehn::ModelParams& p, const py::array_t<double>& policy, std::uint64_t slots,
         std::uint64_t seed, std::uint64_t warmup) {
        const auto model = ehn::build_model(p);
        const auto pol = from_array(policy, model.num_states());
        ehn::SimConfig cfg;
        cfg.slots = slots;
        cfg.seed = seed;
        cfg.warmup_slots = warmup;
        ehn::SimTrace trace;
        {
          py::gil_scoped_release release;
          trace = ehn::simulate(model, pol, cfg);
        }
        const auto& s = trace.metrics;
        py::dict d;
        d["thr_lp"] = estimate(s.throughput_lp);
        d["thr_hp"] = estimate(s.throughput_hp);
        d["loss_lp"] = estimate(s.loss_lp);
        d["loss_hp"] = estimate(s.loss_hp);
        d["drop_lp"] = estimate(s.drop_lp);
        d["drop_hp"] = estimate(s.drop_hp);
        d["objective"] = estimate(s.objective);
        d["generator"] = trace.generator;
        d["seed"] = trace.seed;
        return d;
      },
      py::arg("params"), py::arg("policy"), py::arg("slots") = 1'000'000, py::arg("seed") = 1,
      py::arg("warmup") = 10'000);
}
