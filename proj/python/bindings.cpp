#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <tuple>

#include "netsurv/cli.hpp"
#include "netsurv/diagnostics.hpp"
#include "netsurv/errors.hpp"
#include "netsurv/estimators.hpp"
#include "netsurv/life_table.hpp"
#include "netsurv/sensitivity.hpp"
#include "netsurv/simulation.hpp"

namespace py = pybind11;
using namespace netsurv;

namespace {

std::tuple<int, std::string, std::string> run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  int status;
  {
    py::gil_scoped_release release;
    status = run_command(args, out, err);
  }
  return {status, out.str(), err.str()};
}

double q_of(const std::vector<std::tuple<double, double, double>>& bins, double from_age, double to_age) {
  std::vector<RateBin> b;
  for (const auto& [lo, hi, m] : bins) b.push_back({lo, hi, m});
  return conditional_q(RateSchedule(b), from_age, to_age);
}

// Label -> M_hat (None where the group could not be estimated).
std::map<std::string, std::optional<double>> estimate(const std::string& respondents, const std::string& deaths,
                                                      const std::string& known_pops,
                                                      std::optional<double> population_total,
                                                      std::optional<std::string> tie_definition) {
  const auto kp = load_known_populations(known_pops);
  auto records = load_respondents(respondents, std::filesystem::path(deaths), &kp).records;
  if (tie_definition) records = filter_tie_definition(std::move(records), *tie_definition);
  const GroupScheme scheme({15, 25, 35, 45, 55, 65});
  records = truncate_frame(std::move(records), scheme.frame_rule());
  std::map<std::string, std::optional<double>> out;
  for (const auto& r : network_survival_rate(records, kp, scheme, frame_totals(records, population_total))) {
    out[r.group.label()] = r.estimate ? std::optional(r.estimate->M_hat) : std::nullopt;
  }
  return out;
}

std::map<std::string, std::tuple<long long, long long, double>> deaths_per_interview_by_tie(
    const std::string& respondents, const std::string& deaths) {
  std::map<std::string, std::vector<RespondentRecord>> by_tie;
  for (auto& r : load_respondents(respondents, std::filesystem::path(deaths)).records)
    by_tie[r.tie_definition].push_back(std::move(r));
  std::map<std::string, std::tuple<long long, long long, double>> out;
  for (const auto& [tie, recs] : by_tie) {
    const auto d = deaths_per_interview(recs);
    out[tie] = {d.deaths, d.interviews, d.ratio};
  }
  return out;
}

std::string simulate_truth(const std::string& config_json) {
  const auto world = generate_world(parse_sim_config(nlohmann::json::parse(config_json)));
  return truth_to_json(world).dump();
}

}  // namespace

PYBIND11_MODULE(_netsurv, m) {
  m.doc() = "Network survival estimates of adult death rates";
  m.attr("__version__") = NETSURV_VERSION;

  static py::exception<Error> base(m, "Error", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      base(e.what());
    }
  });

  m.def("run_command", &run, py::arg("args"),
        "Run a netsurv subcommand; returns (exit status, stdout text, stderr text).");
  m.def("rate_to_prob", &rate_to_prob, py::arg("rate"), py::arg("width"), py::arg("a_factor") = py::none());
  m.def("conditional_q", &q_of, py::arg("bins"), py::arg("from_age") = 15.0, py::arg("to_age") = 60.0,
        "Probability of dying between the two ages from (lo, hi, rate) bins.");

  py::class_<AdjustmentFactors>(m, "AdjustmentFactors")
      .def(py::init<>())
      .def_readwrite("delta", &AdjustmentFactors::delta)
      .def_readwrite("tau", &AdjustmentFactors::tau)
      .def_readwrite("eta", &AdjustmentFactors::eta)
      .def_readwrite("c1", &AdjustmentFactors::c1)
      .def_readwrite("c2", &AdjustmentFactors::c2)
      .def_readwrite("c3", &AdjustmentFactors::c3)
      .def_readwrite("c4", &AdjustmentFactors::c4)
      .def_readwrite("K1", &AdjustmentFactors::K1)
      .def_readwrite("K2", &AdjustmentFactors::K2)
      .def("multiplier", &AdjustmentFactors::multiplier);
  m.def("apply_sensitivity", &apply_sensitivity, py::arg("M_hat"), py::arg("factors"));
  m.def(
      "imperfect_sampling_index",
      [](const std::vector<double>& eps, const std::vector<double>& y) { return imperfect_sampling_index(eps, y); },
      py::arg("epsilons"), py::arg("values"));
  m.def(
      "percentile_interval",
      [](const std::vector<double>& v, double level) { return percentile_interval(v, level); }, py::arg("values"),
      py::arg("level") = 0.95);

  m.def("estimate", &estimate, py::arg("respondents"), py::arg("deaths"), py::arg("known_pops"),
        py::arg("population_total") = py::none(), py::arg("tie_definition") = py::none(),
        "Per-group death rates on the default 10-year age groups; None where a group fails.");
  m.def("deaths_per_interview", &deaths_per_interview_by_tie, py::arg("respondents"), py::arg("deaths"),
        "tie definition -> (reported deaths, interviews, ratio), unweighted.");
  m.def("simulate_truth", &simulate_truth, py::arg("config_json"),
        "Generate a synthetic world from a JSON config and return its truth as JSON text.");
}
