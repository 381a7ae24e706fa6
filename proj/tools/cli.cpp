#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include "pairprobit/error.hpp"
#include "pairprobit/estimators.hpp"
#include "pairprobit/inference.hpp"
#include "pairprobit/io.hpp"
#include "pairprobit/simulation.hpp"

namespace pairprobit::cli {

namespace {

using nlohmann::json;

constexpr int kUsage = 1;
constexpr int kNumerical = 2;

struct EstimateArgs {
  std::string data;
  std::string method = "conditional";
  bool se = false;
  std::string odds_tau;
  int quad_order = 40;
  double tol = 1e-8;
  int max_iter = 200;
  bool csv = false;
  std::optional<double> threshold;
  std::string inequality = "inclusive";
  std::string censoring = "face_value";
};

struct SimulateArgs {
  std::string preset;
  std::string scenario;
  std::optional<int> reps;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  int workers = 0;
  std::vector<std::string> estimators;
};

struct TableArgs {
  std::string in;
  std::string format = "markdown";
};

struct DataArgs {
  std::string name;
  std::string out;
  bool raw = false;
  std::optional<double> threshold;
  std::string inequality = "inclusive";
  std::string censoring = "face_value";
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(ErrorKind::InvalidArgument, "cannot write '" + path + "'");
  file << text;
}

Dataset load_data(const std::string& name, std::optional<double> threshold, const std::string& inequality,
                  const std::string& censoring) {
  const auto ineq = io::parse_inequality(inequality);
  if (name == "lead") return io::load_lead_dataset(threshold.value_or(16.0), ineq);
  if (name == "leukaemia" || name == "leukemia") {
    return io::load_leukaemia_dataset(threshold.value_or(12.0), io::parse_censoring(censoring), ineq);
  }
  return io::parse_dataset(name);
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

// Flattens a JSON object into `key,value` lines; nested arrays get indices.
void flatten(const json& j, const std::string& prefix, std::ostream& out) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) flatten(value, prefix.empty() ? key : prefix + "." + key, out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i + 1), out);
  } else if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s.find_first_of(",\"\n") != std::string::npos) {
      std::string q = "\"";
      for (char c : s) {
        if (c == '"') q += '"';
        q += c;
      }
      s = q + "\"";
    }
    out << prefix << ',' << s << '\n';
  } else {
    out << prefix << ',' << j.dump() << '\n';
  }
}

int run_estimate(const EstimateArgs& a, std::ostream& out) {
  const Dataset data = load_data(a.data, a.threshold, a.inequality, a.censoring);
  FitOptions options;
  options.gradient_tolerance = a.tol;
  options.max_iterations = a.max_iter;
  options.quadrature_order = a.quad_order;

  json j;
  j["method"] = a.method;
  j["n"] = data.size();
  j["discordant"] = data.discordant_count();
  j["k_n"] = data.k_n();
  bool converged = true;
  std::optional<double> lambda_for_odds;
  json warnings = json::array();

  if (a.method == "conditional" || a.method == "cml") {
    EstimateResult r = a.method == "conditional" ? estimators::fit_conditional_mle(data, options)
                                                 : estimators::fit_cml_logit(data, options);
    j["theta_hat"] = {{"lambda", r.theta_hat.lambda}, {"beta", vector_json(r.theta_hat.beta)}};
    j["loglik"] = r.loglik;
    j["iterations"] = r.iterations;
    converged = r.converged;
    for (const auto& w : r.warnings) warnings.push_back(w);
    if (a.method == "conditional") {
      j["identifiability"] = {{"rank_ok", r.identifiability.rank_ok},
                              {"cone_ok", r.identifiability.cone_ok},
                              {"details", r.identifiability.details}};
    }
    j["se"] = nullptr;
    if (a.se && a.method == "conditional") {
      const InferenceResult inf = inference::asymptotic_variance(r.theta_hat, data);
      const auto k = static_cast<Eigen::Index>(data.dimension());
      r.se = inf.se;
      const auto wald = inference::wald_test(r, static_cast<std::size_t>(k));
      j["se"] = {{"lambda", inf.se[k]}, {"beta", vector_json(inf.se.head(k))}};
      j["variance"] = {{"lambda_plug_in", inf.se[k] * inf.se[k]},
                       {"lambda_observed", inf.observed_covariance(k, k)},
                       {"lambda_asymptotic", inf.covariance(k, k)},
                       {"c_hat", inf.c_hat}};
      j["wald"] = {{"z", wald.z}, {"p_value", wald.p_value}};
    } else if (a.se) {
      warnings.push_back("standard errors are only available for the conditional method");
    }
    lambda_for_odds = r.theta_hat.lambda;
  } else if (a.method == "heckman") {
    const HeckmanResult r = estimators::fit_heckman_ml(data, options);
    j["theta_hat"] = {{"lambda", r.lambda_hat}, {"beta", vector_json(r.beta_hat)}};
    j["sigma_hat"] = r.sigma_hat;
    j["loglik"] = r.loglik;
    j["iterations"] = r.iterations;
    j["se"] = {{"lambda", std::sqrt(r.lambda_variance)}};
    j["variance"] = {{"lambda", r.lambda_variance}, {"at_sigma_boundary", r.lambda_variance_at_boundary}};
    converged = r.converged;
    for (const auto& w : r.warnings) warnings.push_back(w);
    lambda_for_odds = r.lambda_hat;
  } else if (a.method == "ipw" || a.method == "naive") {
    const double ate =
        a.method == "ipw" ? estimators::ipw_ate(UnpairedSample::from_pairs(data), options) : estimators::naive_ate(data);
    j["theta_hat"] = {{"ate", ate}};
    j["se"] = nullptr;
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown method '" + a.method + "'");
  }

  if (!a.odds_tau.empty()) {
    if (!lambda_for_odds) {
      warnings.push_back("--odds-tau needs a method that estimates lambda");
    } else {
      const auto tau = TauDistribution::parse(a.odds_tau);
      j["odds"] = {{"tau", tau.to_string()}, {"value", inference::treatment_odds(*lambda_for_odds, tau)}};
    }
  }
  j["converged"] = converged;
  j["warnings"] = warnings;

  if (a.csv) {
    out << "field,value\n";
    flatten(j, "", out);
  } else {
    out << j.dump(2) << '\n';
  }
  return converged ? 0 : kNumerical;
}

int run_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  simulation::ScenarioConfig config =
      a.preset.empty() ? simulation::parse_scenario_config(read_file(a.scenario)) : simulation::preset(a.preset);
  if (a.reps) config.replications = *a.reps;
  if (a.seed) config.seed = *a.seed;
  if (!a.estimators.empty()) {
    config.estimators.clear();
    for (const auto& name : a.estimators) config.estimators.push_back(simulation::parse_estimator(name));
  }
  const auto format = a.format == "markdown" ? simulation::TableFormat::Markdown : simulation::TableFormat::Csv;
  const int workers = a.workers > 0 ? a.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  simulation::SimulationSummary summary;
  for (const auto& s : config.scenarios) {
    summary.append(simulation::run_replications(s, config.estimators, config.replications, config.seed, workers));
  }
  for (const auto& row : summary.rows) {
    if (row.failures > 0) {
      err << "note: " << row.failures << " failed replications for " << row.estimator << " at " << row.scenario
          << ", lambda=" << row.lambda << '\n';
    }
  }
  write_output(a.out, simulation::emit_table(summary, format), out);
  return 0;
}

int run_table(const TableArgs& a, std::ostream& out) {
  const auto summary = simulation::parse_table_csv(read_file(a.in));
  out << simulation::emit_table(summary,
                                a.format == "csv" ? simulation::TableFormat::Csv : simulation::TableFormat::Markdown);
  return 0;
}

int run_data(const DataArgs& a, std::ostream& out) {
  if (a.name != "lead" && a.name != "leukaemia" && a.name != "leukemia") {
    throw Error(ErrorKind::InvalidArgument, "unknown builtin dataset '" + a.name + "' (lead|leukaemia)");
  }
  std::ostringstream text;
  if (a.raw && a.name == "lead") {
    text << "pair,case,control\n";
    for (const auto& r : io::lead_records()) text << r.pair << ',' << r.case_level << ',' << r.control_level << '\n';
  } else if (a.raw) {
    text << "pair,weeks,event,group\n";
    for (const auto& r : io::leukaemia_records()) {
      text << r.pair << ',' << r.weeks << ',' << r.event << ',' << r.group << '\n';
    }
  } else {
    text << io::emit_dataset(load_data(a.name, a.threshold, a.inequality, a.censoring));
  }
  write_output(a.out, text.str(), out);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Matched-pairs probit estimation and simulation", "pairprobit"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "Fit a treatment-effect estimator");
  estimate->add_option("--data", est.data, "lead, leukaemia or a pair CSV path")->required();
  estimate->add_option("--method", est.method, "Estimator")
      ->check(CLI::IsMember({"conditional", "heckman", "cml", "ipw", "naive"}));
  estimate->add_flag("--se", est.se, "Report plug-in standard errors and a Wald test");
  estimate->add_option("--odds-tau", est.odds_tau, "Group-effect law for the treatment odds, e.g. normal(0,1)");
  estimate->add_option("--quad-order", est.quad_order, "Gauss-Hermite order")->check(CLI::Range(1, 128));
  estimate->add_option("--tol", est.tol, "Gradient tolerance")->check(CLI::PositiveNumber);
  estimate->add_option("--max-iter", est.max_iter, "Iteration cap")->check(CLI::PositiveNumber);
  auto* json_flag = estimate->add_flag("--json", "JSON output (default)");
  estimate->add_flag("--csv", est.csv, "field,value CSV output")->excludes(json_flag);
  estimate->add_option("--threshold", est.threshold, "Dichotomization threshold for builtin data");
  estimate->add_option("--inequality", est.inequality, "inclusive or strict")
      ->check(CLI::IsMember({"inclusive", "strict"}));
  estimate->add_option("--censoring", est.censoring, "face_value or drop_censored")
      ->check(CLI::IsMember({"face_value", "drop_censored"}));

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo study");
  auto* preset_opt = simulate->add_option("--preset", sim.preset, "table1 .. table6")
                         ->check(CLI::IsMember({"table1", "table2", "table3", "table4", "table5", "table6"}));
  auto* scenario_opt = simulate->add_option("--scenario", sim.scenario, "Scenario file")->check(CLI::ExistingFile);
  preset_opt->excludes(scenario_opt);
  simulate->add_option("--reps", sim.reps, "Replications per scenario")->check(CLI::Range(2, 1000000));
  simulate->add_option("--seed", sim.seed, "Master seed");
  simulate->add_option("--out", sim.out, "Output path (default stdout)");
  simulate->add_option("--format", sim.format, "csv or markdown")->check(CLI::IsMember({"csv", "markdown"}));
  simulate->add_option("--workers", sim.workers, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  simulate->add_option("--estimators", sim.estimators, "Override the estimator list")->delimiter(',');

  TableArgs tab;
  auto* table = app.add_subcommand("table", "Render a summary CSV");
  table->add_option("--in", tab.in, "Summary CSV written by simulate")->required();
  table->add_option("--format", tab.format, "markdown or csv")->check(CLI::IsMember({"markdown", "csv"}));

  DataArgs dat;
  auto* data = app.add_subcommand("data", "Export a builtin dataset");
  data->add_option("--name", dat.name, "lead or leukaemia")->required();
  data->add_option("--out", dat.out, "Output path (default stdout)");
  data->add_flag("--raw", dat.raw, "Export the measured values instead of the pair CSV");
  data->add_option("--threshold", dat.threshold, "Dichotomization threshold");
  data->add_option("--inequality", dat.inequality, "inclusive or strict")
      ->check(CLI::IsMember({"inclusive", "strict"}));
  data->add_option("--censoring", dat.censoring, "face_value or drop_censored")
      ->check(CLI::IsMember({"face_value", "drop_censored"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kUsage;
  }
  if (simulate->parsed() && sim.preset.empty() && sim.scenario.empty()) {
    err << "simulate: one of --preset or --scenario is required\n" << simulate->help();
    return kUsage;
  }

  try {
    if (estimate->parsed()) return run_estimate(est, out);
    if (simulate->parsed()) return run_simulate(sim, out, err);
    if (table->parsed()) return run_table(tab, out);
    return run_data(dat, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return e.is_numerical() ? kNumerical : kUsage;
  }
}

}  // namespace pairprobit::cli
