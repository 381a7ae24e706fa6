#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <string>
#include <vector>

namespace pairprobit {

/// One matched pair. Subject A receives treatment `d`, subject B receives 1-d.
struct MatchedPair {
  int y_a = 0;
  int y_b = 0;
  std::vector<double> x_a;
  std::vector<double> x_b;
  int d = 1;

  bool discordant() const { return y_a + y_b == 1; }
  std::size_t dimension() const { return x_a.size(); }

  friend bool operator==(const MatchedPair&, const MatchedPair&) = default;
};

/// Ordered, validated collection of pairs sharing one covariate dimension.
class Dataset {
 public:
  /// Throws Error(InvalidArgument) on an empty list, non-binary outcomes or
  /// treatment, non-finite covariates; Error(DimensionMismatch) when pairs
  /// disagree on dimension or x_a / x_b lengths differ.
  explicit Dataset(std::vector<MatchedPair> pairs);

  const std::vector<MatchedPair>& pairs() const { return pairs_; }
  std::size_t size() const { return pairs_.size(); }
  std::size_t dimension() const { return k_; }

  std::size_t discordant_count() const;
  /// sqrt(discordant_count).
  double k_n() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<MatchedPair> pairs_;
  std::size_t k_ = 0;
};

/// Parameter point: covariate coefficients and treatment effect.
struct Theta {
  Eigen::VectorXd beta;
  double lambda = 0.0;

  static Theta zero(std::size_t k) { return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k)), 0.0}; }

  /// Packed as (beta..., lambda).
  Eigen::VectorXd packed() const;
  static Theta unpack(const Eigen::VectorXd& v);
};

struct IdentifiabilityReport {
  bool rank_ok = false;
  bool cone_ok = false;
  std::size_t discordant_count = 0;
  std::string details;
};

namespace model {

/// s = lambda (1 - 2d) + beta'(x_b - x_a).
double index_of(const Theta& theta, const MatchedPair& pair);

/// Probability of the (1, 0) outcome given discordance:
/// G(s) / (G(s) + G(-s)).
double conditional_prob(const Theta& theta, const MatchedPair& pair);

/// Conditional probability as a function of the index alone.
double conditional_prob_at(double s);

/// d p / d s.
double conditional_prob_slope(double s);

/// Sum over discordant pairs of y_a log p + y_b log(1 - p).
/// Throws Error(NoDiscordantPairs) when no pair is discordant.
double conditional_loglik(const Theta& theta, const Dataset& data);

/// Analytic gradient of conditional_loglik, packed as (beta..., lambda).
Eigen::VectorXd conditional_loglik_grad(const Theta& theta, const Dataset& data);

/// G(s) + G(-s): the sum of the two Phi-product integrals, each scaled by
/// sqrt(pi) as G is.
double k_integral(const Theta& theta, const MatchedPair& pair);

IdentifiabilityReport check_identifiability(const Dataset& data);

/// Exposed for tests: is there c >= 0 with A c = b? Dense phase-one simplex
/// with Bland's rule.
bool nonnegative_combination_exists(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                    double tolerance = 1e-9);

}  // namespace model
}  // namespace pairprobit
