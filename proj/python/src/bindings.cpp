#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mneme/adversary.hpp"
#include "mneme/analysis.hpp"
#include "mneme/error.hpp"
#include "mneme/experiments.hpp"
#include "mneme/netsim.hpp"
#include "mneme/poe.hpp"
#include "mneme/scenario.hpp"

namespace py = pybind11;
using namespace mneme;

namespace {

netsim::SimConfig sim_config(std::uint32_t population, const std::string& radio, double side,
                             double speed, std::uint64_t seed) {
  netsim::SimConfig c;
  c.width = c.height = side;
  c.population = population;
  c.radio = netsim::RadioSpec::parse(radio);
  c.speed = speed;
  c.seed = seed;
  return c;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Mneme ledger simulator core";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<RuntimeViolation>(m, "RuntimeViolation", base.ptr());

  m.def("p_double_spend_bound", &adversary::p_double_spend_bound, py::arg("active"));
  m.def(
      "p_credit_stealing_bound",
      [](std::uint64_t N, std::uint64_t K, std::uint64_t M) {
        auto b = adversary::p_credit_stealing_bound(N, K, M);
        py::dict d;
        d["printed_log2"] = b.printed_log2;
        d["approx_log2"] = b.approx_log2;
        d["exact_tail"] = b.exact_tail;
        d["exact_log2"] = b.exact_log2;
        return d;
      },
      py::arg("N"), py::arg("K"), py::arg("M"));
  m.def("hypergeometric_tail_log2", &adversary::hypergeometric_tail_log2, py::arg("N"), py::arg("M"),
        py::arg("K"), py::arg("k"));
  m.def("poe_termination_probability", &poe::poe_termination_probability, py::arg("theta"), py::arg("K"),
        py::arg("K_m"));
  m.def("expected_neighbors", &netsim::expected_neighbors, py::arg("active_nodes"),
        py::arg("normalized_radius"));

  m.def(
      "least_squares",
      [](const std::vector<double>& d, const std::vector<double>& t) {
        auto r = analysis::least_squares(d, t);
        return py::make_tuple(r.p, r.q);
      },
      py::arg("d"), py::arg("t"));
  m.def(
      "delta_from_model",
      [](double p, double q, double x, double y) { return analysis::delta_from_model({p, q}, {x, y}); },
      py::arg("p"), py::arg("q"), py::arg("x"), py::arg("y"));
  m.def(
      "poc_feasibility",
      [](const std::vector<std::pair<double, double>>& pts, const std::vector<bool>& can_sign,
         std::size_t mRS, double mD) {
        std::vector<Point> p;
        for (auto [x, y] : pts) p.push_back({x, y});
        auto r = analysis::find_signer_set(p, can_sign, mRS, mD);
        py::dict d;
        d["feasible"] = r.feasible;
        d["subset"] = r.subset;
        d["average_distance"] = r.average_distance;
        return d;
      },
      py::arg("positions"), py::arg("can_sign"), py::arg("mRS"), py::arg("mD"));

  m.def(
      "spread",
      [](std::uint32_t population, Slot slots, std::uint64_t seed, const std::string& radio, double side,
         double speed) {
        py::gil_scoped_release release;
        return experiments::spread_run(sim_config(population, radio, side, speed, seed), slots).curve;
      },
      py::arg("population"), py::arg("slots"), py::arg("seed") = 1, py::arg("radio") = "wifi_direct",
      py::arg("side") = 500.0, py::arg("speed") = 1.0);
  m.def(
      "rgg_component_count",
      [](std::size_t n, double radius, std::uint64_t seed) {
        Rng rng(seed);
        return netsim::rgg_components(netsim::uniform_positions(n, 1, 1, rng), radius).size();
      },
      py::arg("n"), py::arg("radius"), py::arg("seed"));

  m.def(
      "validate_scenario",
      [](const std::filesystem::path& file) {
        auto s = scenario::load_scenario(file);
        scenario::validate(s);
        return py::make_tuple(s.name, scenario::to_string(s.experiment.kind), s.seeds.size());
      },
      py::arg("file"));
  m.def(
      "run_scenario",
      [](const std::filesystem::path& file, const std::filesystem::path& out, std::size_t parallel) {
        auto s = scenario::load_scenario(file);
        scenario::validate(s);
        std::vector<std::string> files;
        {
          py::gil_scoped_release release;
          for (const auto& f : scenario::run(s, out, parallel).files) files.push_back(f.string());
        }
        return files;
      },
      py::arg("file"), py::arg("out"), py::arg("parallel") = 1);
}
