#include "pairprobit/model.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "pairprobit/error.hpp"
#include "pairprobit/numerics.hpp"

namespace pairprobit {

Dataset::Dataset(std::vector<MatchedPair> pairs) : pairs_(std::move(pairs)) {
  if (pairs_.empty()) throw Error(ErrorKind::InvalidArgument, "dataset has no pairs");
  k_ = pairs_.front().x_a.size();
  for (std::size_t i = 0; i < pairs_.size(); ++i) {
    const auto& p = pairs_[i];
    auto binary = [](int v) { return v == 0 || v == 1; };
    if (!binary(p.y_a) || !binary(p.y_b) || !binary(p.d)) {
      throw Error(ErrorKind::InvalidArgument,
                  "pair " + std::to_string(i) + ": y_a, y_b and d must be 0 or 1");
    }
    if (p.x_a.size() != k_ || p.x_b.size() != k_) {
      throw Error(ErrorKind::DimensionMismatch,
                  "pair " + std::to_string(i) + ": covariate dimension differs from " +
                      std::to_string(k_));
    }
    for (std::size_t j = 0; j < k_; ++j) {
      if (!std::isfinite(p.x_a[j]) || !std::isfinite(p.x_b[j])) {
        throw Error(ErrorKind::InvalidArgument,
                    "pair " + std::to_string(i) + ": non-finite covariate");
      }
    }
  }
}

std::size_t Dataset::discordant_count() const {
  std::size_t n = 0;
  for (const auto& p : pairs_) n += p.discordant() ? 1 : 0;
  return n;
}

double Dataset::k_n() const { return std::sqrt(static_cast<double>(discordant_count())); }

Eigen::VectorXd Theta::packed() const {
  Eigen::VectorXd v(beta.size() + 1);
  v.head(beta.size()) = beta;
  v[beta.size()] = lambda;
  return v;
}

Theta Theta::unpack(const Eigen::VectorXd& v) {
  return {v.head(v.size() - 1), v[v.size() - 1]};
}

namespace model {

namespace {

void require_dimension(const Theta& theta, std::size_t k) {
  if (static_cast<std::size_t>(theta.beta.size()) != k) {
    throw Error(ErrorKind::DimensionMismatch,
                "theta has " + std::to_string(theta.beta.size()) +
                    " coefficients, data has dimension " + std::to_string(k));
  }
}

// a(s) = log G(s) - log G(-s), so p = logistic(a).
double log_odds(double s) {
  return numerics::log_g_function(s) - numerics::log_g_function(-s);
}

double log_logistic(double a) {
  return a >= 0.0 ? -std::log1p(std::exp(-a)) : a - std::log1p(std::exp(a));
}

double logistic(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

// da/ds = G'(s)/G(s) + G'(-s)/G(-s).
double log_odds_slope(double s) {
  return numerics::g_log_derivative(s) + numerics::g_log_derivative(-s);
}

}  // namespace

double index_of(const Theta& theta, const MatchedPair& pair) {
  require_dimension(theta, pair.dimension());
  double s = theta.lambda * (1 - 2 * pair.d);
  for (std::size_t j = 0; j < pair.dimension(); ++j) {
    s += theta.beta[static_cast<Eigen::Index>(j)] * (pair.x_b[j] - pair.x_a[j]);
  }
  return s;
}

double conditional_prob_at(double s) { return logistic(log_odds(s)); }

double conditional_prob_slope(double s) {
  const double p = conditional_prob_at(s);
  return p * (1.0 - p) * log_odds_slope(s);
}

double conditional_prob(const Theta& theta, const MatchedPair& pair) {
  return conditional_prob_at(index_of(theta, pair));
}

double conditional_loglik(const Theta& theta, const Dataset& data) {
  require_dimension(theta, data.dimension());
  double total = 0.0;
  std::size_t used = 0;
  for (const auto& pair : data.pairs()) {
    if (!pair.discordant()) continue;
    ++used;
    const double a = log_odds(index_of(theta, pair));
    total += pair.y_a == 1 ? log_logistic(a) : log_logistic(-a);
  }
  if (used == 0) throw Error(ErrorKind::NoDiscordantPairs, "no discordant pairs");
  return total;
}

Eigen::VectorXd conditional_loglik_grad(const Theta& theta, const Dataset& data) {
  require_dimension(theta, data.dimension());
  const auto k = static_cast<Eigen::Index>(data.dimension());
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(k + 1);
  std::size_t used = 0;
  for (const auto& pair : data.pairs()) {
    if (!pair.discordant()) continue;
    ++used;
    const double s = index_of(theta, pair);
    const double p = conditional_prob_at(s);
    // d/ds of y_a log p + y_b log(1-p).
    const double dlds = (pair.y_a == 1 ? (1.0 - p) : -p) * log_odds_slope(s);
    for (Eigen::Index j = 0; j < k; ++j) {
      grad[j] += dlds * (pair.x_b[static_cast<std::size_t>(j)] - pair.x_a[static_cast<std::size_t>(j)]);
    }
    grad[k] += dlds * (1 - 2 * pair.d);
  }
  if (used == 0) throw Error(ErrorKind::NoDiscordantPairs, "no discordant pairs");
  return grad;
}

double k_integral(const Theta& theta, const MatchedPair& pair) {
  const double s = index_of(theta, pair);
  return numerics::g_function(s) + numerics::g_function(-s);
}

bool nonnegative_combination_exists(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                    double tolerance) {
  const Eigen::Index rows = a.rows();
  const Eigen::Index cols = a.cols();
  if (rows == 0) return true;
  if (b.lpNorm<Eigen::Infinity>() <= tolerance) return true;

  // Tableau [A | I | b] with rows flipped so b >= 0; artificials start basic.
  const Eigen::Index width = cols + rows + 1;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(rows, width);
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double sign = b[r] < 0.0 ? -1.0 : 1.0;
    t.row(r).head(cols) = sign * a.row(r);
    t(r, cols + r) = 1.0;
    t(r, width - 1) = sign * b[r];
    basis[static_cast<std::size_t>(r)] = cols + r;
  }
  // Reduced costs of the phase-one objective (sum of artificials).
  Eigen::RowVectorXd cost = Eigen::RowVectorXd::Zero(width);
  for (Eigen::Index r = 0; r < rows; ++r) cost -= t.row(r);
  for (Eigen::Index r = 0; r < rows; ++r) cost[cols + r] = 0.0;

  const double scale = std::max(1.0, b.lpNorm<Eigen::Infinity>());
  const int max_pivots = 50 * static_cast<int>(width);
  for (int pivot = 0; pivot < max_pivots; ++pivot) {
    Eigen::Index enter = -1;
    for (Eigen::Index c = 0; c < width - 1; ++c) {
      if (cost[c] < -tolerance) {
        enter = c;
        break;
      }
    }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (t(r, enter) > tolerance) {
        const double ratio = t(r, width - 1) / t(r, enter);
        if (ratio < best - tolerance ||
            (std::fabs(ratio - best) <= tolerance && leave >= 0 &&
             basis[static_cast<std::size_t>(r)] < basis[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = r;
        }
      }
    }
    if (leave < 0) break;  // unbounded; cannot happen for phase one
    t.row(leave) /= t(leave, enter);
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (r != leave && t(r, enter) != 0.0) t.row(r) -= t(r, enter) * t.row(leave);
    }
    cost -= cost[enter] * t.row(leave);
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  // Objective value is minus the rhs entry of the cost row.
  return -cost[width - 1] <= tolerance * scale;
}

IdentifiabilityReport check_identifiability(const Dataset& data) {
  IdentifiabilityReport report;
  report.discordant_count = data.discordant_count();
  const auto k = static_cast<Eigen::Index>(data.dimension());
  std::ostringstream details;

  if (report.discordant_count == 0) {
    report.details = "no discordant pairs; treatment effect not identified";
    return report;
  }
  if (k == 0) {
    report.rank_ok = true;
    report.cone_ok = true;
    details << "no covariates; " << report.discordant_count << " discordant pairs";
    report.details = details.str();
    return report;
  }

  auto difference = [&](const MatchedPair& p) {
    Eigen::VectorXd v(k);
    for (Eigen::Index j = 0; j < k; ++j) {
      v[j] = p.x_b[static_cast<std::size_t>(j)] - p.x_a[static_cast<std::size_t>(j)];
    }
    return v;
  };

  // Condition (a): discordant differences span R^k.
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(report.discordant_count), k);
  Eigen::Index r = 0;
  for (const auto& p : data.pairs()) {
    if (p.discordant()) rows.row(r++) = difference(p).transpose();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(rows);
  const auto& sv = svd.singularValues();
  Eigen::Index rank = 0;
  const double largest = sv.size() > 0 ? sv[0] : 0.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (largest > 0.0 && sv[i] >= 1e-8 * largest) ++rank;
  }
  report.rank_ok = rank == k;
  details << "rank " << rank << " of " << k << " over " << report.discordant_count
          << " discordant pairs";

  // Conditions (b) / (b'): within a treatment arm, some difference equals a
  // non-positive combination of the other differences in that arm.
  auto cone_holds = [&](int arm) -> bool {
    std::vector<Eigen::VectorXd> group;
    for (const auto& p : data.pairs()) {
      if (p.d == arm) group.push_back(difference(p));
    }
    for (std::size_t j = 0; j < group.size(); ++j) {
      Eigen::MatrixXd others(k, static_cast<Eigen::Index>(group.size() - 1));
      Eigen::Index c = 0;
      for (std::size_t i = 0; i < group.size(); ++i) {
        if (i != j) others.col(c++) = group[i];
      }
      if (nonnegative_combination_exists(others, -group[j])) return true;
    }
    return false;
  };
  const bool b0 = cone_holds(0);
  const bool b1 = b0 ? false : cone_holds(1);
  report.cone_ok = b0 || b1;
  details << "; cone condition " << (b0 ? "holds in d=0 arm" : b1 ? "holds in d=1 arm" : "fails");
  report.details = details.str();
  return report;
}

}  // namespace model
}  // namespace pairprobit
