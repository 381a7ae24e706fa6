#pragma once

#include <Eigen/Dense>

#include "pairprobit/estimators.hpp"
#include "pairprobit/model.hpp"
#include "pairprobit/tau_distribution.hpp"

namespace pairprobit {

struct InferenceResult {
  /// Asymptotic covariance of k_n (theta_hat - theta): c * Sigma^{-1}.
  Eigen::MatrixXd covariance;
  /// sqrt(diag(covariance)) / k_n, packed as (beta..., lambda).
  Eigen::VectorXd se;
  double c_hat = 0.0;
  Eigen::MatrixXd sigma_hat_matrix;
  double k_n = 0.0;
  /// Inverse negative Hessian of the conditional log-likelihood at theta_hat.
  Eigen::MatrixXd observed_covariance;
};

struct WaldResult {
  double z = 0.0;
  double p_value = 1.0;
};

namespace inference {

/// Plug-in Sigma and c averaged over all n pairs, covariance = c Sigma^{-1}.
/// Also fills observed_covariance. Throws Error(SingularSigma) when Sigma is
/// numerically singular (smallest/largest eigenvalue below 1e-10) and
/// Error(InvalidArgument) when n < k + 2.
InferenceResult asymptotic_variance(const Theta& theta_hat, const Dataset& data);

/// z = theta_j / se_j with a two-sided normal p-value. Component indexes the
/// packed (beta..., lambda) vector. Throws Error(InvalidArgument) if the
/// estimate carries no standard errors or the index is out of range.
WaldResult wald_test(const EstimateResult& estimate, std::size_t component);
WaldResult wald_test(const EstimateResult& estimate, const InferenceResult& inference,
                     std::size_t component);

/// Integral of Phi(tau + lambda) f(tau) over that of Phi(tau) f(tau).
/// Normal and uniform laws use closed forms, the normal mixture uses
/// Gauss-Hermite per component, Student-t and Cauchy use tanh-sinh
/// quadrature after mapping onto (-1, 1). Throws Error(NonIntegrable) if the
/// quadrature does not reach its tolerance.
double treatment_odds(double lambda, const TauDistribution& tau);

/// Integral of Phi(tau + shift) f(tau).
double expected_probit(double shift, const TauDistribution& tau);

}  // namespace inference
}  // namespace pairprobit
