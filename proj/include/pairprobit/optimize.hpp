#pragma once

#include <Eigen/Dense>
#include <functional>

namespace pairprobit::optimize {

using Objective = std::function<double(const Eigen::VectorXd&)>;
using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct Options {
  double gradient_tolerance = 1e-8;
  double step_tolerance = 1e-12;
  int max_iterations = 200;
  // Iteration stops (without convergence) once any coordinate exceeds this in
  // absolute value; callers treat that as separation.
  double divergence_bound = 50.0;
};

enum class Stop { Gradient, Step, MaxIterations, Diverged };

struct Result {
  Eigen::VectorXd x;
  double value = 0.0;
  Eigen::VectorXd gradient;
  int iterations = 0;
  Stop stop = Stop::MaxIterations;

  bool converged(double gradient_tolerance) const {
    return stop != Stop::Diverged && gradient.size() > 0 &&
           gradient.lpNorm<Eigen::Infinity>() <= gradient_tolerance;
  }
};

/// Hessian by central differences of an analytic gradient, symmetrized.
Eigen::MatrixXd fd_hessian(const Gradient& gradient, const Eigen::VectorXd& x);

/// Damped Newton ascent. The Hessian comes from fd_hessian; when it is not
/// negative definite the step falls back to steepest ascent. Both step kinds
/// are backtracked until the Armijo condition holds.
Result maximize(const Objective& f, const Gradient& gradient, Eigen::VectorXd x0,
                const Options& options = {});

}  // namespace pairprobit::optimize
