#include "pairprobit/simulation.hpp"

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <thread>

#include "pairprobit/error.hpp"

namespace pairprobit::simulation {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::optional<double> tau_standard_deviation(const TauDistribution& tau) {
  return std::visit(
      overloaded{
          [](const TauDistribution::Normal& n) -> std::optional<double> { return std::sqrt(n.variance); },
          [](const TauDistribution::Uniform& u) -> std::optional<double> {
            return (u.b - u.a) / std::sqrt(12.0);
          },
          [](const TauDistribution::StudentT& t) -> std::optional<double> {
            if (t.df <= 2.0) return std::nullopt;
            return std::sqrt(t.df / (t.df - 2.0));
          },
          [](const TauDistribution::Cauchy&) -> std::optional<double> { return std::nullopt; },
          [](const TauDistribution::NormalMixture& m) -> std::optional<double> {
            const double mean = m.p * m.mean1 + (1.0 - m.p) * m.mean2;
            const double second = m.p * (m.variance1 + m.mean1 * m.mean1) +
                                  (1.0 - m.p) * (m.variance2 + m.mean2 * m.mean2);
            return std::sqrt(second - mean * mean);
          },
      },
      tau.kind);
}

}  // namespace

void Scenario::validate() const {
  tau.validate();
  auto fail = [](const std::string& m) { throw Error(ErrorKind::InvalidArgument, "scenario: " + m); };
  if (n == 0) fail("n must be positive");
  if (!std::isfinite(lambda)) fail("lambda must be finite");
  if (covariates == CovariateLaw::None && !beta.empty()) fail("beta must be empty without covariates");
  if (covariates != CovariateLaw::None && beta.size() != 1) fail("covariate designs are scalar; give one beta");
  if (treatment == TreatmentLaw::PropensityLogistic && covariates != CovariateLaw::IpwDesign) {
    fail("propensity_logistic treatment requires the ipw_design covariate law");
  }
  if (!(treatment_p > 0.0 && treatment_p < 1.0)) fail("treatment_p must lie in (0, 1)");
}

std::string Scenario::label() const {
  std::ostringstream out;
  out << "n=" << n << ";tau=" << tau.to_string();
  if (!beta.empty()) {
    out << ";beta=";
    for (std::size_t j = 0; j < beta.size(); ++j) out << (j ? "/" : "") << format_double(beta[j]);
  }
  if (covariates == CovariateLaw::IpwDesign) out << ";ipw_design";
  return out.str();
}

std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t index) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(index + 0x5851f42d4c957f2dULL)));
}

Dataset generate_pairs(const Scenario& scenario, std::mt19937_64& rng) {
  scenario.validate();
  boost::random::normal_distribution<double> normal(0.0, 1.0);
  boost::random::uniform_01<double> unit;
  boost::random::uniform_real_distribution<double> symmetric(-1.0, 1.0);
  const double beta = scenario.beta.empty() ? 0.0 : scenario.beta.front();

  std::vector<MatchedPair> pairs;
  pairs.reserve(scenario.n);
  for (std::size_t i = 0; i < scenario.n; ++i) {
    MatchedPair p;
    const double tau = scenario.tau.sample(rng);
    double xa = 0.0, xb = 0.0;
    switch (scenario.covariates) {
      case CovariateLaw::None:
        break;
      case CovariateLaw::Standard:
        xa = normal(rng);
        xb = xa + normal(rng);
        break;
      case CovariateLaw::IpwDesign:
        xa = normal(rng);
        xb = symmetric(rng);
        break;
    }
    if (scenario.covariates != CovariateLaw::None) {
      p.x_a = {xa};
      p.x_b = {xb};
    }
    if (scenario.treatment == TreatmentLaw::Bernoulli) {
      p.d = unit(rng) < scenario.treatment_p ? 1 : 0;
    } else {
      double u = unit(rng);
      while (u <= 0.0) u = unit(rng);
      const double logistic_noise = std::log(u / (1.0 - u));
      p.d = 0.75 * xa + 0.25 * xb + logistic_noise > 0.0 ? 1 : 0;
    }
    const double eps_a = normal(rng);
    const double eps_b = normal(rng);
    p.y_a = beta * xa + tau + scenario.lambda * p.d + eps_a > 0.0 ? 1 : 0;
    p.y_b = beta * xb + tau + scenario.lambda * (1 - p.d) + eps_b > 0.0 ? 1 : 0;
    pairs.push_back(std::move(p));
  }
  return Dataset(std::move(pairs));
}

const char* to_string(Estimator e) {
  switch (e) {
    case Estimator::Conditional:
      return "conditional";
    case Estimator::Heckman:
      return "heckman";
    case Estimator::Cml:
      return "cml";
    case Estimator::Ipw:
      return "ipw";
    case Estimator::Naive:
      return "naive";
  }
  return "?";
}

Estimator parse_estimator(const std::string& name) {
  for (auto e : {Estimator::Conditional, Estimator::Heckman, Estimator::Cml, Estimator::Ipw,
                 Estimator::Naive}) {
    if (name == to_string(e)) return e;
  }
  throw Error(ErrorKind::Parse, "unknown estimator '" + name + "'");
}

EstimatorSpec builtin_estimator(Estimator which, const Scenario& scenario, const FitOptions& options) {
  EstimatorSpec spec;
  spec.name = to_string(which);
  const std::size_t k = scenario.beta.size();
  FitOptions opts = options;
  opts.check_identifiability = false;

  auto add_theta_targets = [&](const std::string& prefix) {
    spec.targets.push_back(prefix);
    spec.truths.push_back(scenario.lambda);
    for (std::size_t j = 0; j < k; ++j) {
      spec.targets.push_back(prefix + ":beta" + std::to_string(j + 1));
      spec.truths.push_back(scenario.beta[j]);
    }
  };
  auto theta_values = [k](const Theta& t) {
    std::vector<double> v{t.lambda};
    for (std::size_t j = 0; j < k; ++j) v.push_back(t.beta[static_cast<Eigen::Index>(j)]);
    return v;
  };

  switch (which) {
    case Estimator::Conditional:
    case Estimator::Cml: {
      add_theta_targets(spec.name);
      const bool conditional = which == Estimator::Conditional;
      spec.fit = [opts, conditional, theta_values](const Dataset& data) -> std::optional<std::vector<double>> {
        try {
          const auto r = conditional ? estimators::fit_conditional_mle(data, opts)
                                     : estimators::fit_cml_logit(data, opts);
          if (!r.converged) return std::nullopt;
          return theta_values(r.theta_hat);
        } catch (const Error&) {
          return std::nullopt;
        }
      };
      break;
    }
    case Estimator::Heckman: {
      add_theta_targets(spec.name);
      const auto sd = tau_standard_deviation(scenario.tau);
      if (sd) {
        spec.targets.push_back("heckman:sigma");
        spec.truths.push_back(*sd);
      }
      const bool with_sigma = sd.has_value();
      spec.fit = [opts, k, with_sigma](const Dataset& data) -> std::optional<std::vector<double>> {
        try {
          const auto r = estimators::fit_heckman_ml(data, opts);
          if (!r.converged) return std::nullopt;
          std::vector<double> v{r.lambda_hat};
          for (std::size_t j = 0; j < k; ++j) v.push_back(r.beta_hat[static_cast<Eigen::Index>(j)]);
          if (with_sigma) v.push_back(r.sigma_hat);
          return v;
        } catch (const Error&) {
          return std::nullopt;
        }
      };
      break;
    }
    case Estimator::Ipw:
      spec.targets = {"ipw"};
      spec.truths = {scenario.lambda};
      spec.fit = [opts](const Dataset& data) -> std::optional<std::vector<double>> {
        try {
          return std::vector<double>{estimators::ipw_ate(UnpairedSample::from_pairs(data), opts)};
        } catch (const Error&) {
          return std::nullopt;
        }
      };
      break;
    case Estimator::Naive:
      spec.targets = {"naive"};
      spec.truths = {scenario.lambda};
      spec.fit = [](const Dataset& data) -> std::optional<std::vector<double>> {
        return std::vector<double>{estimators::naive_ate(data)};
      };
      break;
  }
  return spec;
}

void SimulationSummary::append(const SimulationSummary& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

SummaryRow summarize(const std::vector<double>& estimates, double truth) {
  SummaryRow row;
  row.replications = static_cast<int>(estimates.size());
  if (estimates.empty()) {
    row.bias = row.se = row.rmse = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  const double r = static_cast<double>(estimates.size());
  double mean = 0.0;
  for (double v : estimates) mean += v;
  mean /= r;
  double centered = 0.0, squared_error = 0.0;
  for (double v : estimates) {
    centered += (v - mean) * (v - mean);
    squared_error += (v - truth) * (v - truth);
  }
  row.bias = mean - truth;
  row.se = estimates.size() > 1 ? std::sqrt(centered / (r - 1.0)) : std::numeric_limits<double>::quiet_NaN();
  row.rmse = std::sqrt(squared_error / r);
  return row;
}

SimulationSummary run_replications(const Scenario& scenario, const std::vector<EstimatorSpec>& estimators,
                                   int replications, std::uint64_t seed, int workers) {
  scenario.validate();
  if (replications < 2) throw Error(ErrorKind::InvalidArgument, "need at least 2 replications");
  const auto reps = static_cast<std::size_t>(replications);

  // results[rep][estimator]
  std::vector<std::vector<std::optional<std::vector<double>>>> results(
      reps, std::vector<std::optional<std::vector<double>>>(estimators.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t rep = next++; rep < reps; rep = next++) {
      auto rng = replication_rng(seed, rep);
      const Dataset data = generate_pairs(scenario, rng);
      for (std::size_t e = 0; e < estimators.size(); ++e) results[rep][e] = estimators[e].fit(data);
    }
  };
  const int threads = std::max(1, std::min<int>(workers, replications));
  if (threads == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  SimulationSummary summary;
  bool any_success = false;
  for (std::size_t e = 0; e < estimators.size(); ++e) {
    const auto& spec = estimators[e];
    for (std::size_t t = 0; t < spec.targets.size(); ++t) {
      std::vector<double> values;
      int failures = 0;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        const auto& r = results[rep][e];
        if (r && t < r->size() && std::isfinite((*r)[t])) {
          values.push_back((*r)[t]);
        } else {
          ++failures;
        }
      }
      any_success = any_success || !values.empty();
      SummaryRow row = summarize(values, spec.truths[t]);
      row.scenario = scenario.label();
      row.lambda = scenario.lambda;
      row.estimator = spec.targets[t];
      row.failures = failures;
      summary.rows.push_back(std::move(row));
    }
  }
  if (!any_success && !estimators.empty()) {
    throw Error(ErrorKind::AllReplicationsFailed, "every replication failed for " + scenario.label());
  }
  return summary;
}

SimulationSummary run_replications(const Scenario& scenario, const std::vector<Estimator>& estimators,
                                   int replications, std::uint64_t seed, int workers,
                                   const FitOptions& options) {
  std::vector<EstimatorSpec> specs;
  for (auto e : estimators) specs.push_back(builtin_estimator(e, scenario, options));
  return run_replications(scenario, specs, replications, seed, workers);
}

// ---------------------------------------------------------------------------
// Tables

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": bad number '" + s + "'");
  }
}

constexpr const char* kHeader = "scenario,lambda,estimator,BIAS,SE,RMSE,R,failures";

std::string fixed3(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream out;
  out << std::fixed << std::setprecision(3) << v;
  return out.str();
}

}  // namespace

std::string emit_table(const SimulationSummary& summary, TableFormat format) {
  std::ostringstream out;
  if (format == TableFormat::Csv) {
    out << kHeader << '\n';
    for (const auto& r : summary.rows) {
      out << csv_field(r.scenario) << ',' << format_double(r.lambda) << ',' << csv_field(r.estimator) << ','
          << format_double(r.bias) << ',' << format_double(r.se) << ',' << format_double(r.rmse) << ','
          << r.replications << ',' << r.failures << '\n';
    }
  } else {
    out << "| scenario | lambda | estimator | BIAS | SE | RMSE | R | failures |\n";
    out << "|---|---:|---|---:|---:|---:|---:|---:|\n";
    for (const auto& r : summary.rows) {
      out << "| " << r.scenario << " | " << format_double(r.lambda) << " | " << r.estimator << " | "
          << fixed3(r.bias) << " | " << fixed3(r.se) << " | " << fixed3(r.rmse) << " | "
          << r.replications << " | " << r.failures << " |\n";
    }
  }
  return out.str();
}

SimulationSummary parse_table_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  SimulationSummary summary;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kHeader) throw Error(ErrorKind::Parse, "line 1: expected header '" + std::string(kHeader) + "'");
      header_seen = true;
      continue;
    }
    const auto f = split_csv_line(line, line_no);
    if (f.size() != 8) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected 8 fields");
    }
    SummaryRow r;
    r.scenario = f[0];
    r.lambda = parse_double(f[1], line_no);
    r.estimator = f[2];
    r.bias = parse_double(f[3], line_no);
    r.se = parse_double(f[4], line_no);
    r.rmse = parse_double(f[5], line_no);
    r.replications = static_cast<int>(parse_double(f[6], line_no));
    r.failures = static_cast<int>(parse_double(f[7], line_no));
    summary.rows.push_back(std::move(r));
  }
  if (!header_seen) throw Error(ErrorKind::Parse, "empty summary table");
  return summary;
}

// ---------------------------------------------------------------------------
// Scenario configuration

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

ScenarioConfig parse_scenario_config(const std::string& text) {
  ScenarioConfig config;
  Scenario base;
  std::vector<double> lambdas{0.0};
  std::vector<std::size_t> sizes{base.n};
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Parse, "scenario line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto numbers = [&]() {
      std::vector<double> v;
      for (const auto& item : split_list(value)) v.push_back(parse_double(item, line_no));
      return v;
    };
    if (key == "tau") {
      base.tau = TauDistribution::parse(value);
    } else if (key == "lambda") {
      lambdas = numbers();
    } else if (key == "beta") {
      base.beta = numbers();
    } else if (key == "n") {
      sizes.clear();
      for (double v : numbers()) {
        if (!(v >= 1.0) || v != std::floor(v)) throw Error(ErrorKind::Parse, "scenario: n must be a positive integer");
        sizes.push_back(static_cast<std::size_t>(v));
      }
    } else if (key == "covariates") {
      if (value == "none") {
        base.covariates = CovariateLaw::None;
      } else if (value == "standard") {
        base.covariates = CovariateLaw::Standard;
      } else if (value == "ipw_design") {
        base.covariates = CovariateLaw::IpwDesign;
      } else {
        throw Error(ErrorKind::Parse, "scenario: unknown covariate law '" + value + "'");
      }
    } else if (key == "treatment") {
      if (value == "bernoulli") {
        base.treatment = TreatmentLaw::Bernoulli;
      } else if (value == "propensity_logistic") {
        base.treatment = TreatmentLaw::PropensityLogistic;
      } else {
        throw Error(ErrorKind::Parse, "scenario: unknown treatment law '" + value + "'");
      }
    } else if (key == "treatment_p") {
      base.treatment_p = parse_double(value, line_no);
    } else if (key == "estimators") {
      config.estimators.clear();
      for (const auto& name : split_list(value)) config.estimators.push_back(parse_estimator(name));
    } else if (key == "reps") {
      config.replications = static_cast<int>(parse_double(value, line_no));
    } else if (key == "seed") {
      config.seed = static_cast<std::uint64_t>(parse_double(value, line_no));
    } else if (key == "rng") {
      if (value != "mt19937_64") throw Error(ErrorKind::Parse, "scenario: only rng = mt19937_64 is supported");
    } else {
      throw Error(ErrorKind::Parse, "scenario line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  for (std::size_t n : sizes) {
    for (double lambda : lambdas) {
      Scenario s = base;
      s.n = n;
      s.lambda = lambda;
      s.validate();
      config.scenarios.push_back(std::move(s));
    }
  }
  return config;
}

ScenarioConfig preset(const std::string& name) {
  ScenarioConfig config;
  const double pi_var = kLogisticScaleVariance;
  auto grid = [&](const TauDistribution& tau, std::size_t n, const std::vector<double>& lambdas) {
    for (double lambda : lambdas) {
      Scenario s;
      s.tau = tau;
      s.n = n;
      s.lambda = lambda;
      config.scenarios.push_back(s);
    }
  };
  const std::vector<double> five{1.0, 0.5, 0.0, -0.5, -1.0};
  if (name == "table1") {
    const std::vector<double> nine{2.0, 1.5, 1.0, 0.5, 0.0, -0.5, -1.0, -1.5, -2.0};
    grid(TauDistribution::uniform(-4, 4), 1000, nine);
    grid(TauDistribution::normal(0, 4), 1000, nine);
    grid(TauDistribution::cauchy(), 1000, nine);
    grid(TauDistribution::uniform(-10, 10), 5000, nine);
    grid(TauDistribution::normal(0, 25), 5000, nine);
    grid(TauDistribution::cauchy(), 5000, nine);
  } else if (name == "table2") {
    for (std::size_t n : {200, 500, 1000, 2000, 3000, 5000}) grid(TauDistribution::normal(0, pi_var), n, five);
  } else if (name == "table3") {
    const std::vector<std::pair<double, double>> cells{
        {1, 1},   {0.5, 0.5}, {0, 0},    {-0.5, -0.5}, {-1, -1}, {0, 1},  {0, 0.5},   {0, -0.5}, {0, -1},
        {1, -1},  {0.5, -0.5}, {-0.5, 0.5}, {-1, 1},   {1, 0},   {0.5, 0}, {-0.5, 0}, {-1, 0}};
    for (const auto& [lambda, beta] : cells) {
      Scenario s;
      s.tau = TauDistribution::normal(0, pi_var);
      s.n = 1000;
      s.lambda = lambda;
      s.beta = {beta};
      s.covariates = CovariateLaw::Standard;
      config.scenarios.push_back(s);
    }
  } else if (name == "table4") {
    config.estimators = {Estimator::Conditional, Estimator::Heckman};
    grid(TauDistribution::normal(0, 1), 1000, five);
    grid(TauDistribution::normal(0, 4), 1000, five);
    grid(TauDistribution::mixture(0.5, -6, 9, 6, 9), 1000, five);
    grid(TauDistribution::mixture(0.5, -6, 3, 6, 3), 1000, five);
    grid(TauDistribution::mixture(0.5, -6, 3, 6, 9), 1000, five);
  } else if (name == "table5") {
    config.estimators = {Estimator::Conditional, Estimator::Cml};
    grid(TauDistribution::normal(0, 1), 500, five);
    grid(TauDistribution::normal(0, pi_var), 500, five);
    grid(TauDistribution::normal(0, 6), 500, five);
    grid(TauDistribution::mixture(0.5, -4, 6, 4, 6), 500, five);
  } else if (name == "table6") {
    config.estimators = {Estimator::Conditional, Estimator::Ipw, Estimator::Heckman};
    for (double lambda : five) {
      Scenario s;
      s.tau = TauDistribution::normal(0, pi_var);
      s.n = 1000;
      s.lambda = lambda;
      s.beta = {1.0};
      s.covariates = CovariateLaw::IpwDesign;
      s.treatment = TreatmentLaw::PropensityLogistic;
      config.scenarios.push_back(s);
    }
  } else {
    throw Error(ErrorKind::InvalidArgument, "unknown preset '" + name + "' (table1 .. table6)");
  }
  return config;
}

}  // namespace pairprobit::simulation
