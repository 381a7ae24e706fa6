#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pairprobit/error.hpp"
#include "pairprobit/estimators.hpp"
#include "pairprobit/inference.hpp"
#include "pairprobit/io.hpp"
#include "pairprobit/numerics.hpp"
#include "pairprobit/simulation.hpp"

namespace py = pybind11;
using namespace pairprobit;

namespace {

FitOptions make_options(double tol, int max_iter, int quad_order) {
  FitOptions o;
  o.gradient_tolerance = tol;
  o.max_iterations = max_iter;
  o.quadrature_order = quad_order;
  return o;
}

py::dict estimate_dict(const EstimateResult& r) {
  py::dict d;
  d["lambda"] = r.theta_hat.lambda;
  d["beta"] = r.theta_hat.beta;
  d["loglik"] = r.loglik;
  d["k_n"] = r.k_n;
  d["iterations"] = r.iterations;
  d["converged"] = r.converged;
  d["warnings"] = r.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_pairprobit, m) {
  m.doc() = "Matched-pairs probit estimators";

  static py::exception<Error> error_type(m, "PairProbitError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(error_type.ptr(), (std::string(to_string(e.kind())) + ": " + e.what()).c_str());
    }
  });

  py::class_<MatchedPair>(m, "MatchedPair")
      .def(py::init([](int y_a, int y_b, std::vector<double> x_a, std::vector<double> x_b, int d) {
             return MatchedPair{y_a, y_b, std::move(x_a), std::move(x_b), d};
           }),
           py::arg("y_a"), py::arg("y_b"), py::arg("x_a") = std::vector<double>{},
           py::arg("x_b") = std::vector<double>{}, py::arg("d") = 1)
      .def_readonly("y_a", &MatchedPair::y_a)
      .def_readonly("y_b", &MatchedPair::y_b)
      .def_readonly("x_a", &MatchedPair::x_a)
      .def_readonly("x_b", &MatchedPair::x_b)
      .def_readonly("d", &MatchedPair::d);

  py::class_<Dataset>(m, "Dataset")
      .def(py::init<std::vector<MatchedPair>>(), py::arg("pairs"))
      .def_property_readonly("pairs", &Dataset::pairs)
      .def_property_readonly("dimension", &Dataset::dimension)
      .def_property_readonly("discordant_count", &Dataset::discordant_count)
      .def_property_readonly("k_n", &Dataset::k_n)
      .def("__len__", &Dataset::size)
      .def("__eq__", [](const Dataset& a, const Dataset& b) { return a == b; });

  m.def(
      "load_lead_dataset",
      [](double threshold, const std::string& inequality) {
        return io::load_lead_dataset(threshold, io::parse_inequality(inequality));
      },
      py::arg("threshold") = 16.0, py::arg("inequality") = "inclusive");
  m.def(
      "load_leukaemia_dataset",
      [](double threshold, const std::string& censoring, const std::string& inequality) {
        return io::load_leukaemia_dataset(threshold, io::parse_censoring(censoring), io::parse_inequality(inequality));
      },
      py::arg("threshold") = 12.0, py::arg("censoring") = "face_value", py::arg("inequality") = "inclusive");
  m.def("parse_dataset", &io::parse_dataset, py::arg("path"));
  m.def("parse_dataset_text", &io::parse_dataset_text, py::arg("text"), py::arg("source") = "<input>");
  m.def("emit_dataset", &io::emit_dataset, py::arg("data"));

  m.def("g_function", &numerics::g_function, py::arg("x"));
  m.def("log_g_function", &numerics::log_g_function, py::arg("x"));
  m.def("conditional_prob_at", &model::conditional_prob_at, py::arg("s"));

  m.def(
      "fit_conditional_mle",
      [](const Dataset& data, bool se, double tol, int max_iter) {
        auto opts = make_options(tol, max_iter, 40);
        const auto r = estimators::fit_conditional_mle(data, opts);
        py::dict d = estimate_dict(r);
        if (se) {
          const auto inf = inference::asymptotic_variance(r.theta_hat, data);
          d["se"] = inf.se;
          d["covariance"] = inf.covariance;
          d["observed_covariance"] = inf.observed_covariance;
        }
        return d;
      },
      py::arg("data"), py::arg("se") = false, py::arg("tol") = 1e-8, py::arg("max_iter") = 200);
  m.def(
      "fit_cml_logit",
      [](const Dataset& data, double tol, int max_iter) {
        return estimate_dict(estimators::fit_cml_logit(data, make_options(tol, max_iter, 40)));
      },
      py::arg("data"), py::arg("tol") = 1e-8, py::arg("max_iter") = 200);
  m.def(
      "fit_heckman_ml",
      [](const Dataset& data, int quad_order, double tol, int max_iter) {
        const auto r = estimators::fit_heckman_ml(data, make_options(tol, max_iter, quad_order));
        py::dict d;
        d["lambda"] = r.lambda_hat;
        d["beta"] = r.beta_hat;
        d["sigma"] = r.sigma_hat;
        d["loglik"] = r.loglik;
        d["lambda_variance"] = r.lambda_variance;
        d["at_sigma_boundary"] = r.lambda_variance_at_boundary;
        d["converged"] = r.converged;
        d["warnings"] = r.warnings;
        return d;
      },
      py::arg("data"), py::arg("quad_order") = 40, py::arg("tol") = 1e-8, py::arg("max_iter") = 200);
  m.def(
      "ipw_ate", [](const Dataset& data) { return estimators::ipw_ate(UnpairedSample::from_pairs(data)); },
      py::arg("data"));
  m.def("naive_ate", &estimators::naive_ate, py::arg("data"));
  m.def(
      "treatment_odds",
      [](double lambda, const std::string& tau) { return inference::treatment_odds(lambda, TauDistribution::parse(tau)); },
      py::arg("lambda_"), py::arg("tau"));

  m.def(
      "simulate",
      [](const std::string& preset, const std::string& scenario_text, std::optional<int> reps,
         std::optional<std::uint64_t> seed, int workers) {
        auto config = preset.empty() ? simulation::parse_scenario_config(scenario_text) : simulation::preset(preset);
        if (reps) config.replications = *reps;
        if (seed) config.seed = *seed;
        simulation::SimulationSummary summary;
        {
          py::gil_scoped_release release;
          for (const auto& s : config.scenarios) {
            summary.append(simulation::run_replications(s, config.estimators, config.replications, config.seed, workers));
          }
        }
        py::list rows;
        for (const auto& r : summary.rows) {
          py::dict d;
          d["scenario"] = r.scenario;
          d["lambda"] = r.lambda;
          d["estimator"] = r.estimator;
          d["bias"] = r.bias;
          d["se"] = r.se;
          d["rmse"] = r.rmse;
          d["replications"] = r.replications;
          d["failures"] = r.failures;
          rows.append(d);
        }
        return rows;
      },
      py::arg("preset") = "", py::arg("scenario") = "", py::arg("reps") = py::none(), py::arg("seed") = py::none(),
      py::arg("workers") = 1);
}
