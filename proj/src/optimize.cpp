#include "pairprobit/optimize.hpp"

#include <cmath>
#include <limits>

namespace pairprobit::optimize {

Eigen::MatrixXd fd_hessian(const Gradient& gradient, const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd probe = x;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double step = 1e-5 * std::max(1.0, std::fabs(x[j]));
    probe[j] = x[j] + step;
    const Eigen::VectorXd up = gradient(probe);
    probe[j] = x[j] - step;
    const Eigen::VectorXd down = gradient(probe);
    probe[j] = x[j];
    h.col(j) = (up - down) / (2.0 * step);
  }
  return 0.5 * (h + h.transpose());
}

Result maximize(const Objective& f, const Gradient& gradient, Eigen::VectorXd x0,
                const Options& options) {
  Result out;
  out.x = std::move(x0);
  out.value = f(out.x);
  out.gradient = gradient(out.x);

  for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
    if (out.gradient.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance) {
      out.stop = Stop::Gradient;
      return out;
    }

    // Ascent direction: Newton on -H when it is positive definite.
    const Eigen::MatrixXd neg_h = -fd_hessian(gradient, out.x);
    Eigen::LLT<Eigen::MatrixXd> llt(neg_h);
    Eigen::VectorXd direction;
    double t = 1.0;
    if (llt.info() == Eigen::Success) {
      direction = llt.solve(out.gradient);
    }
    if (direction.size() == 0 || !direction.allFinite() || direction.dot(out.gradient) <= 0.0) {
      direction = out.gradient;
      t = 1.0 / std::max(1.0, out.gradient.lpNorm<Eigen::Infinity>());
    }

    const double slope = direction.dot(out.gradient);
    Eigen::VectorXd candidate;
    double candidate_value = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    while (t * direction.lpNorm<Eigen::Infinity>() > options.step_tolerance) {
      candidate = out.x + t * direction;
      candidate_value = f(candidate);
      if (std::isfinite(candidate_value) && candidate_value >= out.value + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      // Near the optimum the predicted gain drops below the rounding error of
      // f; accept a value-neutral step that still shrinks the gradient.
      if (std::isfinite(candidate_value) &&
          std::fabs(candidate_value - out.value) <= 1e-12 * (1.0 + std::fabs(out.value)) &&
          gradient(candidate).lpNorm<Eigen::Infinity>() < out.gradient.lpNorm<Eigen::Infinity>()) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // Backtracking collapsed: the current point is as good as floating point
      // allows along this direction.
      out.stop = Stop::Step;
      return out;
    }

    const double step = (candidate - out.x).lpNorm<Eigen::Infinity>();
    out.x = std::move(candidate);
    out.value = candidate_value;
    out.gradient = gradient(out.x);

    if (out.x.lpNorm<Eigen::Infinity>() > options.divergence_bound) {
      out.stop = Stop::Diverged;
      ++out.iterations;
      return out;
    }
    if (step <= options.step_tolerance) {
      out.stop = Stop::Step;
      ++out.iterations;
      return out;
    }
  }
  out.stop = out.gradient.lpNorm<Eigen::Infinity>() <= options.gradient_tolerance
                 ? Stop::Gradient
                 : Stop::MaxIterations;
  return out;
}

}  // namespace pairprobit::optimize
