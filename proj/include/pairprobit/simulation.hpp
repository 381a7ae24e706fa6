#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pairprobit/estimators.hpp"
#include "pairprobit/model.hpp"
#include "pairprobit/tau_distribution.hpp"

namespace pairprobit::simulation {

enum class CovariateLaw {
  None,      // k = 0
  Standard,  // x_a ~ N(0,1), x_b = x_a + N(0,1)
  IpwDesign, // x_a ~ N(0,1), x_b ~ U(-1,1)
};

enum class TreatmentLaw {
  Bernoulli,           // D ~ Bernoulli(treatment_p)
  PropensityLogistic,  // D = I(0.75 x_a + 0.25 x_b + logistic > 0)
};

struct Scenario {
  TauDistribution tau = TauDistribution::normal(0.0, 1.0);
  double lambda = 0.0;
  std::vector<double> beta;
  std::size_t n = 1000;
  CovariateLaw covariates = CovariateLaw::None;
  TreatmentLaw treatment = TreatmentLaw::Bernoulli;
  double treatment_p = 2.0 / 3.0;

  /// Throws Error(InvalidArgument) for inconsistent combinations.
  void validate() const;
  /// Row label, e.g. "n=1000;tau=normal(0,4)".
  std::string label() const;
};

/// Draws n pairs from the probit matched-pairs model.
Dataset generate_pairs(const Scenario& scenario, std::mt19937_64& rng);

/// Independent generator for replication `index` of a run seeded with `seed`.
std::mt19937_64 replication_rng(std::uint64_t seed, std::uint64_t index);

enum class Estimator { Conditional, Heckman, Cml, Ipw, Naive };

const char* to_string(Estimator e);
/// Throws Error(Parse) for an unknown name.
Estimator parse_estimator(const std::string& name);

/// A fit plus the quantities it reports. `fit` returns one value per target
/// or nullopt when the replication failed (non-convergence, separation,
/// degenerate data).
struct EstimatorSpec {
  std::string name;
  std::vector<std::string> targets;
  std::vector<double> truths;
  std::function<std::optional<std::vector<double>>(const Dataset&)> fit;
};

/// Built-in estimator for a scenario. Treatment-effect targets are compared
/// with scenario.lambda; the Heckman sigma target with the tau standard
/// deviation (omitted when it does not exist).
EstimatorSpec builtin_estimator(Estimator which, const Scenario& scenario,
                                const FitOptions& options = {});

struct SummaryRow {
  std::string scenario;
  double lambda = 0.0;
  std::string estimator;
  double bias = 0.0;
  double se = 0.0;
  double rmse = 0.0;
  /// Replications that entered the moments.
  int replications = 0;
  /// Replications excluded because the fit failed.
  int failures = 0;

  friend bool operator==(const SummaryRow&, const SummaryRow&) = default;
};

struct SimulationSummary {
  std::vector<SummaryRow> rows;

  void append(const SimulationSummary& other);
  friend bool operator==(const SimulationSummary&, const SimulationSummary&) = default;
};

/// Runs R replications; every estimator sees the same datasets. Results do
/// not depend on `workers`. Throws Error(InvalidArgument) for R < 2 and
/// Error(AllReplicationsFailed) if some estimator never succeeded.
SimulationSummary run_replications(const Scenario& scenario, const std::vector<EstimatorSpec>& estimators,
                                   int replications, std::uint64_t seed, int workers = 1);

SimulationSummary run_replications(const Scenario& scenario, const std::vector<Estimator>& estimators,
                                   int replications, std::uint64_t seed, int workers = 1,
                                   const FitOptions& options = {});

/// BIAS, SE (sample sd, R-1 denominator) and RMSE of estimates about truth.
SummaryRow summarize(const std::vector<double>& estimates, double truth);

enum class TableFormat { Csv, Markdown };

/// Columns: scenario, lambda, estimator, BIAS, SE, RMSE, R, failures.
std::string emit_table(const SimulationSummary& summary, TableFormat format);

/// Inverse of emit_table(Csv). Throws Error(Parse).
SimulationSummary parse_table_csv(const std::string& text);

/// A set of scenarios plus run settings, as read from a scenario file or a
/// named preset.
struct ScenarioConfig {
  std::vector<Scenario> scenarios;
  std::vector<Estimator> estimators{Estimator::Conditional};
  int replications = 100;
  std::uint64_t seed = 1;
};

/// Flat `key = value` text; `lambda`, `n` and `beta` take comma lists
/// (lambda and n expand into one scenario each). Throws Error(Parse).
ScenarioConfig parse_scenario_config(const std::string& text);

/// table1 .. table6. Throws Error(InvalidArgument) for unknown names.
ScenarioConfig preset(const std::string& name);

/// Variance used for N(0, pi^2/3) scenarios, with pi rounded to 3.14 as in
/// the original study.
inline constexpr double kLogisticScaleVariance = 3.14 * 3.14 / 3.0;

}  // namespace pairprobit::simulation
