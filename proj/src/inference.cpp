#include "pairprobit/inference.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "pairprobit/error.hpp"
#include "pairprobit/numerics.hpp"
#include "pairprobit/optimize.hpp"

namespace pairprobit::inference {

using numerics::std_normal_cdf;

InferenceResult asymptotic_variance(const Theta& theta_hat, const Dataset& data) {
  const auto k = static_cast<Eigen::Index>(data.dimension());
  if (theta_hat.beta.size() != k) {
    throw Error(ErrorKind::DimensionMismatch, "asymptotic_variance: theta dimension mismatch");
  }
  if (data.size() < static_cast<std::size_t>(k + 2)) {
    throw Error(ErrorKind::InvalidArgument, "asymptotic_variance needs n >= k + 2 pairs");
  }
  if (data.discordant_count() == 0) {
    throw Error(ErrorKind::NoDiscordantPairs, "asymptotic_variance: no discordant pairs");
  }

  InferenceResult out;
  out.sigma_hat_matrix = Eigen::MatrixXd::Zero(k + 1, k + 1);
  Eigen::VectorXd ds(k + 1);
  for (const auto& pair : data.pairs()) {
    const double s = model::index_of(theta_hat, pair);
    const double p = model::conditional_prob_at(s);
    const double kk = numerics::g_function(s) + numerics::g_function(-s);
    // dp/dtheta = (dp/ds) (x_b - x_a, 1 - 2d).
    for (Eigen::Index j = 0; j < k; ++j) {
      ds[j] = pair.x_b[static_cast<std::size_t>(j)] - pair.x_a[static_cast<std::size_t>(j)];
    }
    ds[k] = 1 - 2 * pair.d;
    const double slope = model::conditional_prob_slope(s);
    const double denom = p * (1.0 - p);
    if (denom > 0.0) {
      out.sigma_hat_matrix.noalias() += (kk * slope * slope / denom) * (ds * ds.transpose());
    }
    out.c_hat += kk;
  }
  const double n = static_cast<double>(data.size());
  out.sigma_hat_matrix /= n;
  out.c_hat /= n;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.sigma_hat_matrix);
  const double largest = eig.eigenvalues().maxCoeff();
  const double smallest = eig.eigenvalues().minCoeff();
  if (!(largest > 0.0) || smallest < 1e-10 * largest) {
    throw Error(ErrorKind::SingularSigma,
                "plug-in Sigma is numerically singular; positive-definiteness premise fails");
  }
  out.covariance = out.c_hat * eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() *
                   eig.eigenvectors().transpose();
  out.covariance = 0.5 * (out.covariance + out.covariance.transpose());
  out.k_n = data.k_n();
  out.se = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt() / out.k_n;

  const auto grad = [&](const Eigen::VectorXd& v) {
    return model::conditional_loglik_grad(Theta::unpack(v), data);
  };
  const Eigen::MatrixXd info = -optimize::fd_hessian(grad, theta_hat.packed());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  if (ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.rcond() > 1e-14) {
    out.observed_covariance = ldlt.solve(Eigen::MatrixXd::Identity(k + 1, k + 1));
  } else {
    out.observed_covariance =
        Eigen::MatrixXd::Constant(k + 1, k + 1, std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

namespace {

WaldResult wald_from(double estimate, double se) {
  if (!(se > 0.0)) throw Error(ErrorKind::InvalidArgument, "wald_test: standard error must be > 0");
  WaldResult out;
  out.z = estimate / se;
  out.p_value = 2.0 * std_normal_cdf(-std::fabs(out.z));
  return out;
}

}  // namespace

WaldResult wald_test(const EstimateResult& estimate, std::size_t component) {
  if (!estimate.se) throw Error(ErrorKind::InvalidArgument, "wald_test: estimate has no standard errors");
  const Eigen::VectorXd theta = estimate.theta_hat.packed();
  if (component >= static_cast<std::size_t>(theta.size())) {
    throw Error(ErrorKind::InvalidArgument, "wald_test: component out of range");
  }
  const auto j = static_cast<Eigen::Index>(component);
  return wald_from(theta[j], (*estimate.se)[j]);
}

WaldResult wald_test(const EstimateResult& estimate, const InferenceResult& inference,
                     std::size_t component) {
  const Eigen::VectorXd theta = estimate.theta_hat.packed();
  if (component >= static_cast<std::size_t>(theta.size()) ||
      component >= static_cast<std::size_t>(inference.se.size())) {
    throw Error(ErrorKind::InvalidArgument, "wald_test: component out of range");
  }
  const auto j = static_cast<Eigen::Index>(component);
  return wald_from(theta[j], inference.se[j]);
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Closed form of the integral of Phi(t + shift) over N(mean, variance).
double normal_expectation(double shift, double mean, double variance) {
  return std_normal_cdf((shift + mean) / std::sqrt(1.0 + variance));
}

// Integral of Phi(t + shift) against N(mean, variance) by Gauss-Hermite.
double normal_expectation_gh(double shift, double mean, double variance) {
  const auto& rule = numerics::gauss_hermite(64);
  const double sd = std::sqrt(variance);
  double total = 0.0;
  for (std::size_t j = 0; j < rule.size(); ++j) {
    total += rule.weights[j] * std_normal_cdf(mean + numerics::kSqrt2 * sd * rule.nodes[j] + shift);
  }
  return total / numerics::kSqrtPi;
}

// Antiderivative of Phi: t Phi(t) + phi(t).
double phi_integral(double t) { return t * std_normal_cdf(t) + numerics::std_normal_pdf(t); }

double heavy_tail_expectation(double shift, const TauDistribution& tau) {
  // tau = tan(pi u / 2) maps (-1, 1) onto the line; the Jacobian tames the
  // Cauchy tails into a bounded integrand.
  boost::math::quadrature::tanh_sinh<double> integrator;
  const auto integrand = [&](double u) {
    const double angle = std::numbers::pi * u / 2.0;
    const double t = std::tan(angle);
    const double c = std::cos(angle);
    const double jac = std::numbers::pi / 2.0 / (c * c);
    const double v = std_normal_cdf(t + shift) * tau.pdf(t) * jac;
    return std::isfinite(v) ? v : 0.0;
  };
  double error = 0.0, l1 = 0.0;
  const double value = integrator.integrate(integrand, -1.0, 1.0, 1e-12, &error, &l1);
  if (!std::isfinite(value) || error > 1e-8 * std::max(1.0, l1)) {
    throw Error(ErrorKind::NonIntegrable, "treatment_odds: quadrature did not converge");
  }
  return value;
}

}  // namespace

double expected_probit(double shift, const TauDistribution& tau) {
  return std::visit(
      overloaded{
          [&](const TauDistribution::Normal& n) { return normal_expectation(shift, n.mean, n.variance); },
          [&](const TauDistribution::Uniform& u) {
            return (phi_integral(u.b + shift) - phi_integral(u.a + shift)) / (u.b - u.a);
          },
          [&](const TauDistribution::NormalMixture& m) {
            return m.p * normal_expectation_gh(shift, m.mean1, m.variance1) +
                   (1.0 - m.p) * normal_expectation_gh(shift, m.mean2, m.variance2);
          },
          [&](const TauDistribution::StudentT&) { return heavy_tail_expectation(shift, tau); },
          [&](const TauDistribution::Cauchy&) { return heavy_tail_expectation(shift, tau); },
      },
      tau.kind);
}

double treatment_odds(double lambda, const TauDistribution& tau) {
  if (!std::isfinite(lambda)) throw Error(ErrorKind::InvalidArgument, "treatment_odds: lambda must be finite");
  tau.validate();
  if (lambda == 0.0) return 1.0;
  return expected_probit(lambda, tau) / expected_probit(0.0, tau);
}

}  // namespace pairprobit::inference
