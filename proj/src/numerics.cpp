#include "pairprobit/numerics.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <mutex>
#include <string>

#include "pairprobit/error.hpp"

namespace pairprobit::numerics {

namespace {

constexpr double kInvSqrt2Pi = 0.39894228040143267794;
// Past this point the closed form of G loses more than ~2 digits to
// cancellation, so the tail goes through the Mills-ratio continued fraction.
constexpr double kTailSwitch = 5.0;

// For z > 0 returns {T, R} where R(z) = Phi(-z)/phi(z) = 1/(z + T) and
// T(z) = 1/(z + 2/(z + 3/(z + ...))). Then 1 - z R = T R without cancellation.
std::pair<double, double> mills_tail(double z) {
  constexpr int kDepth = 300;
  double u = kDepth / z;
  for (int k = kDepth - 1; k >= 2; --k) u = k / (z + u);
  const double t = 1.0 / (z + u);
  return {t, 1.0 / (z + t)};
}

}  // namespace

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / kSqrt2); }

double std_normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double std_normal_cdf_clamped(double x) {
  const double p = std_normal_cdf(x);
  if (p < 1e-300) return 1e-300;
  if (p > 1.0 - 1e-16) return 1.0 - 1e-16;
  return p;
}

double g_function(double x) {
  return -kSqrtPi * x * std_normal_cdf(-x / kSqrt2) + std::exp(-x * x / 4.0);
}

double g_prime(double x) { return -kSqrtPi * std_normal_cdf(-x / kSqrt2); }

double log_g_function(double x) {
  if (x <= kTailSwitch) return std::log(g_function(x));
  // G(x) = exp(-z^2/2) T(z) R(z) with z = x / sqrt(2).
  const auto [t, r] = mills_tail(x / kSqrt2);
  return -x * x / 4.0 + std::log(t * r);
}

double g_log_derivative(double x) {
  if (x <= kTailSwitch) return g_prime(x) / g_function(x);
  const auto [t, r] = mills_tail(x / kSqrt2);
  (void)r;
  return -1.0 / (kSqrt2 * t);
}

namespace {

QuadratureRule build_gauss_hermite(int order) {
  // Newton iteration on the orthonormal Hermite recurrence with the usual
  // asymptotic starting guesses; nodes are symmetric so only half are solved.
  const int n = order;
  const double pim4 = 0.7511255444649425;  // pi^(-1/4)
  std::vector<double> x(n), w(n);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    for (int its = 0; its < 100; ++its) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::fabs(z - z1) <= 1e-15 * std::max(1.0, std::fabs(z))) {
        // One more pass so pp matches the converged root.
        p1 = pim4;
        p2 = 0.0;
        for (int j = 0; j < n; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
        }
        pp = std::sqrt(2.0 * n) * p2;
        break;
      }
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  if (n % 2 == 1) x[m - 1] = 0.0;

  // Recurrence produced descending nodes.
  QuadratureRule rule;
  rule.nodes.assign(x.rbegin(), x.rend());
  rule.weights.assign(w.rbegin(), w.rend());
  return rule;
}

}  // namespace

const QuadratureRule& gauss_hermite(int order) {
  if (order < 1 || order > kMaxHermiteOrder) {
    throw Error(ErrorKind::InvalidArgument,
                "gauss_hermite: order " + std::to_string(order) + " outside [1, " +
                    std::to_string(kMaxHermiteOrder) + "]");
  }
  static std::array<std::unique_ptr<const QuadratureRule>, kMaxHermiteOrder + 1> cache;
  static std::mutex mutex;
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<const QuadratureRule>(build_gauss_hermite(order));
  return *slot;
}

}  // namespace pairprobit::numerics
