#pragma once

#include <vector>

namespace pairprobit::numerics {

inline constexpr double kSqrtPi = 1.7724538509055160273;
inline constexpr double kSqrt2 = 1.4142135623730950488;

/// Standard normal CDF, via the complementary error function.
double std_normal_cdf(double x);

/// Standard normal density.
double std_normal_pdf(double x);

/// Standard normal CDF clamped to [1e-300, 1 - 1e-16] for use inside
/// log-likelihoods.
double std_normal_cdf_clamped(double x);

/// G(x) = -sqrt(pi) x Phi(-x/sqrt(2)) + exp(-x^2/4).
///
/// Equals sqrt(pi) times the integral of Phi(u) Phi(-x-u) over the real line.
/// Underflows to zero for x beyond roughly 53; use log_g_function when the
/// value feeds a ratio.
double g_function(double x);

/// G'(x) = -sqrt(pi) Phi(-x/sqrt(2)).
double g_prime(double x);

/// log G(x), finite for every finite x. For x > 5, where the closed form
/// cancels, G is rewritten through a continued fraction for the normal Mills
/// ratio.
double log_g_function(double x);

/// G'(x) / G(x), finite for every finite x.
double g_log_derivative(double x);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
};

inline constexpr int kMaxHermiteOrder = 128;

/// Gauss-Hermite rule for the weight exp(-t^2), 1 <= order <= 128.
/// Rules are computed once per order and cached for the process lifetime.
/// Throws Error(InvalidArgument) for an order out of range.
const QuadratureRule& gauss_hermite(int order);

}  // namespace pairprobit::numerics
