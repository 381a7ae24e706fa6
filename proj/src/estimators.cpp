#include "pairprobit/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "pairprobit/error.hpp"
#include "pairprobit/numerics.hpp"
#include "pairprobit/optimize.hpp"

namespace pairprobit {

UnpairedSample UnpairedSample::from_pairs(const Dataset& data) {
  UnpairedSample out;
  out.records.reserve(2 * data.size());
  for (const auto& p : data.pairs()) {
    out.records.push_back({p.y_a, p.x_a, p.d});
    out.records.push_back({p.y_b, p.x_b, 1 - p.d});
  }
  return out;
}

namespace estimators {

namespace {

using numerics::std_normal_cdf;
using numerics::std_normal_cdf_clamped;
using numerics::std_normal_pdf;

optimize::Options optimizer_options(const FitOptions& o) {
  optimize::Options out;
  out.gradient_tolerance = o.gradient_tolerance;
  out.step_tolerance = o.step_tolerance;
  out.max_iterations = o.max_iterations;
  return out;
}

double log_logistic(double a) {
  return a >= 0.0 ? -std::log1p(std::exp(-a)) : a - std::log1p(std::exp(a));
}

double logistic(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

// Shared tail of the two conditional fits: convergence flags and warnings.
EstimateResult finish_conditional_fit(const optimize::Result& opt, const Dataset& data,
                                      const FitOptions& options) {
  EstimateResult out;
  out.theta_hat = Theta::unpack(opt.x);
  out.loglik = opt.value;
  out.iterations = opt.iterations;
  out.k_n = data.k_n();
  out.converged = opt.converged(options.gradient_tolerance);

  // Every discordant pair predicted with certainty means the maximum is at
  // infinity even if the gradient already looks flat.
  const bool perfect_fit = opt.value > -1e-9 * static_cast<double>(data.discordant_count());
  if (opt.stop == optimize::Stop::Diverged || perfect_fit) {
    out.converged = false;
    out.warnings.push_back(
        "separation: estimates diverge (one-sided discordance); theta_hat is not finite-sample "
        "meaningful");
  } else if (!out.converged) {
    out.warnings.push_back("non-convergence: iteration cap reached after " +
                           std::to_string(opt.iterations) + " iterations");
  }
  if (options.check_identifiability) {
    out.identifiability = model::check_identifiability(data);
    if (!out.identifiability.rank_ok || !out.identifiability.cone_ok) {
      out.warnings.push_back("identifiability conditions not met: " + out.identifiability.details);
    }
  } else {
    out.identifiability.discordant_count = data.discordant_count();
  }
  return out;
}

}  // namespace

EstimateResult fit_conditional_mle(const Dataset& data, const FitOptions& options) {
  if (data.discordant_count() == 0) {
    throw Error(ErrorKind::NoDiscordantPairs, "conditional MLE needs at least one discordant pair");
  }
  const auto f = [&](const Eigen::VectorXd& v) {
    return model::conditional_loglik(Theta::unpack(v), data);
  };
  const auto g = [&](const Eigen::VectorXd& v) {
    return model::conditional_loglik_grad(Theta::unpack(v), data);
  };
  const auto opt =
      optimize::maximize(f, g, Theta::zero(data.dimension()).packed(), optimizer_options(options));
  return finish_conditional_fit(opt, data, options);
}

// ---------------------------------------------------------------------------
// Heckman random-effects probit

namespace {

struct HeckmanTerms {
  double loglik = 0.0;
  Eigen::VectorXd grad;  // (beta..., lambda, log sigma)
};

// Parameters packed as (beta..., lambda, log sigma) unless sigma is given
// explicitly, in which case the log-sigma slot is ignored.
HeckmanTerms heckman_terms(const Dataset& data, const Eigen::VectorXd& beta, double lambda,
                           double sigma, int order, bool want_grad) {
  const auto& rule = numerics::gauss_hermite(order);
  const auto k = static_cast<Eigen::Index>(data.dimension());
  const std::size_t m = rule.size();
  std::vector<double> shift(m), weight(m);
  for (std::size_t j = 0; j < m; ++j) {
    shift[j] = numerics::kSqrt2 * sigma * rule.nodes[j];
    weight[j] = rule.weights[j] / numerics::kSqrtPi;
  }

  HeckmanTerms out;
  if (want_grad) out.grad = Eigen::VectorXd::Zero(k + 2);
  for (const auto& p : data.pairs()) {
    double a = lambda * p.d;
    double b = lambda * (1 - p.d);
    for (Eigen::Index j = 0; j < k; ++j) {
      a += beta[j] * p.x_a[static_cast<std::size_t>(j)];
      b += beta[j] * p.x_b[static_cast<std::size_t>(j)];
    }
    const double qa = 2.0 * p.y_a - 1.0;
    const double qb = 2.0 * p.y_b - 1.0;
    double like = 0.0, d_a = 0.0, d_b = 0.0, d_sigma = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double za = a + shift[j];
      const double zb = b + shift[j];
      const double fa = std_normal_cdf_clamped(qa * za);
      const double fb = std_normal_cdf_clamped(qb * zb);
      like += weight[j] * fa * fb;
      if (want_grad) {
        const double ga = qa * std_normal_pdf(za) * fb;
        const double gb = qb * std_normal_pdf(zb) * fa;
        d_a += weight[j] * ga;
        d_b += weight[j] * gb;
        d_sigma += weight[j] * (ga + gb) * numerics::kSqrt2 * rule.nodes[j];
      }
    }
    out.loglik += std::log(like);
    if (want_grad) {
      for (Eigen::Index j = 0; j < k; ++j) {
        out.grad[j] += (d_a * p.x_a[static_cast<std::size_t>(j)] +
                        d_b * p.x_b[static_cast<std::size_t>(j)]) / like;
      }
      out.grad[k] += (d_a * p.d + d_b * (1 - p.d)) / like;
      out.grad[k + 1] += sigma * d_sigma / like;
    }
  }
  return out;
}

}  // namespace

double heckman_loglik(const Dataset& data, const Eigen::VectorXd& beta, double lambda,
                      double sigma, int quadrature_order) {
  if (static_cast<std::size_t>(beta.size()) != data.dimension()) {
    throw Error(ErrorKind::DimensionMismatch, "heckman_loglik: beta dimension mismatch");
  }
  return heckman_terms(data, beta, lambda, sigma, quadrature_order, false).loglik;
}

HeckmanResult fit_heckman_ml(const Dataset& data, const FitOptions& options) {
  if (data.size() < 2) throw Error(ErrorKind::InvalidArgument, "Heckman fit needs n >= 2 pairs");
  numerics::gauss_hermite(options.quadrature_order);  // validates the order

  const auto k = static_cast<Eigen::Index>(data.dimension());
  const auto f = [&](const Eigen::VectorXd& v) {
    return heckman_terms(data, v.head(k), v[k], std::exp(v[k + 1]), options.quadrature_order, false)
        .loglik;
  };
  const auto g = [&](const Eigen::VectorXd& v) {
    return heckman_terms(data, v.head(k), v[k], std::exp(v[k + 1]), options.quadrature_order, true)
        .grad;
  };
  const auto opt = optimize::maximize(f, g, Eigen::VectorXd::Zero(k + 2), optimizer_options(options));

  HeckmanResult out;
  out.beta_hat = opt.x.head(k);
  out.lambda_hat = opt.x[k];
  out.sigma_hat = std::exp(opt.x[k + 1]);
  out.loglik = opt.value;
  out.iterations = opt.iterations;
  out.converged = opt.converged(options.gradient_tolerance);
  if (opt.stop == optimize::Stop::Diverged) {
    out.converged = false;
    out.warnings.push_back("separation: Heckman estimates diverge");
  } else if (!out.converged) {
    out.warnings.push_back("non-convergence: iteration cap reached");
  }
  if (out.sigma_hat < 1e-3) {
    out.warnings.push_back("sigma_hat at the zero boundary");
  }

  // Observed information; at the boundary the log-sigma row is degenerate so
  // sigma is held fixed instead.
  const Eigen::MatrixXd info = -optimize::fd_hessian(g, opt.x);
  bool interior = out.sigma_hat >= 1e-3;
  if (interior) {
    Eigen::LLT<Eigen::MatrixXd> llt(info);
    if (llt.info() == Eigen::Success) {
      const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(k + 2, k + 2));
      out.lambda_variance = cov(k, k);
    } else {
      interior = false;
    }
  }
  if (!interior) {
    out.lambda_variance_at_boundary = true;
    const Eigen::MatrixXd sub = info.topLeftCorner(k + 1, k + 1);
    Eigen::LLT<Eigen::MatrixXd> llt(sub);
    out.lambda_variance = llt.info() == Eigen::Success
                              ? llt.solve(Eigen::MatrixXd::Identity(k + 1, k + 1))(k, k)
                              : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Conditional logit

double cml_loglik(const Theta& theta, const Dataset& data) {
  double total = 0.0;
  std::size_t used = 0;
  for (const auto& pair : data.pairs()) {
    if (!pair.discordant()) continue;
    ++used;
    const double s = model::index_of(theta, pair);
    total += pair.y_a == 1 ? log_logistic(-s) : log_logistic(s);
  }
  if (used == 0) throw Error(ErrorKind::NoDiscordantPairs, "no discordant pairs");
  return total;
}

namespace {

Eigen::VectorXd cml_grad(const Theta& theta, const Dataset& data) {
  const auto k = static_cast<Eigen::Index>(data.dimension());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(k + 1);
  for (const auto& pair : data.pairs()) {
    if (!pair.discordant()) continue;
    const double s = model::index_of(theta, pair);
    const double dlds = pair.y_a == 1 ? -logistic(s) : logistic(-s);
    for (Eigen::Index j = 0; j < k; ++j) {
      grad[j] += dlds * (pair.x_b[static_cast<std::size_t>(j)] - pair.x_a[static_cast<std::size_t>(j)]);
    }
    grad[k] += dlds * (1 - 2 * pair.d);
  }
  return grad;
}

}  // namespace

EstimateResult fit_cml_logit(const Dataset& data, const FitOptions& options) {
  if (data.discordant_count() == 0) {
    throw Error(ErrorKind::NoDiscordantPairs, "conditional logit needs at least one discordant pair");
  }
  const auto f = [&](const Eigen::VectorXd& v) { return cml_loglik(Theta::unpack(v), data); };
  const auto g = [&](const Eigen::VectorXd& v) { return cml_grad(Theta::unpack(v), data); };
  const auto opt =
      optimize::maximize(f, g, Theta::zero(data.dimension()).packed(), optimizer_options(options));
  return finish_conditional_fit(opt, data, options);
}

// ---------------------------------------------------------------------------
// IPW

Eigen::VectorXd fit_propensity(const UnpairedSample& sample, const FitOptions& options) {
  if (sample.records.empty()) throw Error(ErrorKind::PropensityDegenerate, "empty sample");
  const std::size_t k = sample.records.front().x.size();
  const auto n = static_cast<Eigen::Index>(sample.records.size());
  const auto cols = static_cast<Eigen::Index>(k + 1);
  Eigen::MatrixXd design(n, cols);
  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = sample.records[static_cast<std::size_t>(i)];
    if (r.x.size() != k) throw Error(ErrorKind::DimensionMismatch, "records disagree on dimension");
    design(i, 0) = 1.0;
    for (std::size_t j = 0; j < k; ++j) design(i, static_cast<Eigen::Index>(j + 1)) = r.x[j];
    d[i] = r.d;
  }
  const double treated = d.sum();
  if (treated == 0.0 || treated == static_cast<double>(n)) {
    throw Error(ErrorKind::PropensityDegenerate, "one treatment arm is empty");
  }

  Eigen::VectorXd coef = Eigen::VectorXd::Zero(cols);
  coef[0] = std::log(treated / (static_cast<double>(n) - treated));
  for (int it = 0; it < options.max_iterations; ++it) {
    const Eigen::VectorXd eta = design * coef;
    Eigen::VectorXd mu(n), w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      mu[i] = logistic(eta[i]);
      w[i] = mu[i] * (1.0 - mu[i]);
    }
    const Eigen::VectorXd score = design.transpose() * (d - mu);
    if (score.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance * static_cast<double>(n)) {
      return coef;
    }
    const Eigen::MatrixXd info = design.transpose() * w.asDiagonal() * design;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14) {
      throw Error(ErrorKind::PropensityDegenerate, "propensity information matrix is singular");
    }
    const Eigen::VectorXd step = ldlt.solve(score);
    coef += step;
    if (!coef.allFinite() || coef.lpNorm<Eigen::Infinity>() > 30.0) {
      throw Error(ErrorKind::PropensityDegenerate, "propensity fit separates");
    }
    if (step.lpNorm<Eigen::Infinity>() <= options.step_tolerance) return coef;
  }
  throw Error(ErrorKind::PropensityDegenerate, "propensity fit did not converge");
}

double ipw_ate(const UnpairedSample& sample, const FitOptions& options) {
  const Eigen::VectorXd coef = fit_propensity(sample, options);
  const double n = static_cast<double>(sample.records.size());
  double treated = 0.0, control = 0.0;
  for (const auto& r : sample.records) {
    double eta = coef[0];
    for (std::size_t j = 0; j < r.x.size(); ++j) eta += coef[static_cast<Eigen::Index>(j + 1)] * r.x[j];
    const double e = std::clamp(logistic(eta), options.propensity_lower, options.propensity_upper);
    if (r.d == 1) {
      treated += r.y / e;
    } else {
      control += r.y / (1.0 - e);
    }
  }
  return treated / n - control / n;
}

// ---------------------------------------------------------------------------
// Model-free summaries

double naive_ate(const Dataset& data) {
  double total = 0.0;
  for (const auto& p : data.pairs()) {
    total += p.y_a * p.d + p.y_b * (1 - p.d) - (p.y_a * (1 - p.d) + p.y_b * p.d);
  }
  return total / static_cast<double>(data.size());
}

double ate_closed_form_normal(double lambda, double mu_tau, double sigma_tau) {
  const double scale = std::sqrt(1.0 + sigma_tau * sigma_tau);
  return std_normal_cdf((lambda + mu_tau) / scale) - std_normal_cdf(mu_tau / scale);
}

double ate_closed_form_mixture(double lambda, double p, double mu1, double sigma1, double mu2,
                               double sigma2) {
  return p * ate_closed_form_normal(lambda, mu1, sigma1) +
         (1.0 - p) * ate_closed_form_normal(lambda, mu2, sigma2);
}

}  // namespace estimators
}  // namespace pairprobit
