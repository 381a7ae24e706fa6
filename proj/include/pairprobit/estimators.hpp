#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "pairprobit/model.hpp"

namespace pairprobit {

struct FitOptions {
  double gradient_tolerance = 1e-8;
  double step_tolerance = 1e-12;
  int max_iterations = 200;
  int quadrature_order = 40;
  double propensity_lower = 0.01;
  double propensity_upper = 0.99;
  /// Skip Theorem-1 diagnostics (used by the simulation engine).
  bool check_identifiability = true;
};

struct EstimateResult {
  Theta theta_hat;
  /// Standard errors, filled in by inference when requested.
  std::optional<Eigen::VectorXd> se;
  double k_n = 0.0;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  IdentifiabilityReport identifiability;
  std::vector<std::string> warnings;
};

struct HeckmanResult {
  double lambda_hat = 0.0;
  /// Standard deviation of the normal group effect.
  double sigma_hat = 0.0;
  Eigen::VectorXd beta_hat;
  double loglik = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Variance of lambda_hat from the inverse observed information. When the
  /// fitted sigma sits at the zero boundary the information in log sigma
  /// vanishes; the variance is then computed with sigma held fixed and
  /// `lambda_variance_at_boundary` is set.
  double lambda_variance = 0.0;
  bool lambda_variance_at_boundary = false;
  std::vector<std::string> warnings;
};

/// Individual-level records formed by splitting pairs.
struct UnpairedSample {
  struct Record {
    int y = 0;
    std::vector<double> x;
    int d = 0;
  };
  std::vector<Record> records;

  /// A contributes (y_a, x_a, d); B contributes (y_b, x_b, 1 - d).
  static UnpairedSample from_pairs(const Dataset& data);
};

namespace estimators {

/// Conditional MLE of (beta, lambda) from discordant pairs. Starts at theta = 0.
/// Throws Error(NoDiscordantPairs). Non-convergence and separation are
/// reported through `converged` and `warnings`.
EstimateResult fit_conditional_mle(const Dataset& data, const FitOptions& options = {});

/// Random-effects probit ML with tau ~ N(0, sigma^2), integrated by
/// Gauss-Hermite. Throws Error(InvalidArgument) for n < 2 or a bad order.
HeckmanResult fit_heckman_ml(const Dataset& data, const FitOptions& options = {});

/// Random-effects log-likelihood at (beta, lambda, sigma); sigma = 0 gives
/// independent probits.
double heckman_loglik(const Dataset& data, const Eigen::VectorXd& beta, double lambda,
                      double sigma, int quadrature_order = 40);

/// Conditional logit on discordant pairs: P((1,0) | discordant) =
/// logistic(-s) with s = lambda (1 - 2d) + beta'(x_b - x_a).
EstimateResult fit_cml_logit(const Dataset& data, const FitOptions& options = {});

/// Conditional-logit log-likelihood (exposed for gradient tests).
double cml_loglik(const Theta& theta, const Dataset& data);

/// Horvitz-Thompson IPW estimate of the ATE with a logistic propensity on
/// (1, x), trimmed to [propensity_lower, propensity_upper].
/// Throws Error(PropensityDegenerate) when an arm is empty or the propensity
/// fit separates.
double ipw_ate(const UnpairedSample& sample, const FitOptions& options = {});

/// Logistic regression of d on (1, x) by Newton-Raphson; returns
/// (intercept, slopes...). Throws Error(PropensityDegenerate) on separation.
Eigen::VectorXd fit_propensity(const UnpairedSample& sample, const FitOptions& options = {});

/// Sample average of treated-minus-control outcomes over pairs.
double naive_ate(const Dataset& data);

/// E[Phi(tau + lambda) - Phi(tau)] for tau ~ N(mu, sigma^2):
/// Phi((lambda + mu)/sqrt(1 + sigma^2)) - Phi(mu/sqrt(1 + sigma^2)).
double ate_closed_form_normal(double lambda, double mu_tau, double sigma_tau);

/// p * normal(mu1, sigma1) + (1 - p) * normal(mu2, sigma2) closed forms.
double ate_closed_form_mixture(double lambda, double p, double mu1, double sigma1, double mu2,
                               double sigma2);

}  // namespace estimators
}  // namespace pairprobit
