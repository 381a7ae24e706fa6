#include <gtest/gtest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <random>

#include "pairprobit/error.hpp"
#include "pairprobit/estimators.hpp"
#include "pairprobit/model.hpp"

using namespace pairprobit;

namespace {

double boost_cdf(double x) { return boost::math::cdf(boost::math::normal_distribution<double>(), x); }

double dot(const Eigen::VectorXd& beta, const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += beta[static_cast<Eigen::Index>(j)] * x[j];
  return s;
}

// P((1,0) | discordant) as the ratio of the two pair-effect integrals.
double conditional_prob_oracle(const Theta& theta, const MatchedPair& p) {
  const double a = dot(theta.beta, p.x_a) + theta.lambda * p.d;
  const double b = dot(theta.beta, p.x_b) + theta.lambda * (1 - p.d);
  boost::math::quadrature::sinh_sinh<double> integrator;
  const double i10 = integrator.integrate([&](double u) { return boost_cdf(a + u) * boost_cdf(-b - u); }, 1e-13);
  const double i01 = integrator.integrate([&](double u) { return boost_cdf(-a - u) * boost_cdf(b + u); }, 1e-13);
  return i10 / (i10 + i01);
}

Dataset random_dataset(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::bernoulli_distribution coin(0.5);
  std::vector<MatchedPair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    MatchedPair p;
    for (std::size_t j = 0; j < k; ++j) {
      p.x_a.push_back(z(rng));
      p.x_b.push_back(z(rng));
    }
    p.d = coin(rng) ? 1 : 0;
    p.y_a = coin(rng) ? 1 : 0;
    p.y_b = coin(rng) ? 1 : 0;
    pairs.push_back(p);
  }
  return Dataset(pairs);
}

Dataset tally(int n10, int n01, int n11 = 0, int n00 = 0) {
  std::vector<MatchedPair> pairs;
  for (int i = 0; i < n10; ++i) pairs.push_back({1, 0, {}, {}, 1});
  for (int i = 0; i < n01; ++i) pairs.push_back({0, 1, {}, {}, 1});
  for (int i = 0; i < n11; ++i) pairs.push_back({1, 1, {}, {}, 1});
  for (int i = 0; i < n00; ++i) pairs.push_back({0, 0, {}, {}, 1});
  return Dataset(pairs);
}

}  // namespace

TEST(Dataset, ValidatesInput) {
  EXPECT_THROW(Dataset({}), Error);
  EXPECT_THROW(Dataset({{2, 0, {}, {}, 1}}), Error);
  EXPECT_THROW(Dataset({{1, 0, {}, {}, 3}}), Error);
  EXPECT_THROW(Dataset({{1, 0, {1.0}, {}, 1}}), Error);
  EXPECT_THROW(Dataset({{1, 0, {1.0}, {2.0}, 1}, {1, 0, {}, {}, 1}}), Error);
  EXPECT_THROW(Dataset({{1, 0, {NAN}, {2.0}, 1}}), Error);
  const Dataset ok({{1, 0, {1.0}, {2.0}, 1}, {1, 1, {0.0}, {0.5}, 0}});
  EXPECT_EQ(ok.size(), 2u);
  EXPECT_EQ(ok.dimension(), 1u);
  EXPECT_EQ(ok.discordant_count(), 1u);
  EXPECT_DOUBLE_EQ(ok.k_n(), 1.0);
}

TEST(Theta, PackRoundTrip) {
  Theta t{Eigen::Vector2d(0.5, -1.5), 0.25};
  const Eigen::VectorXd v = t.packed();
  ASSERT_EQ(v.size(), 3);
  EXPECT_DOUBLE_EQ(v[2], 0.25);
  const Theta back = Theta::unpack(v);
  EXPECT_EQ(back.beta, t.beta);
  EXPECT_EQ(back.lambda, t.lambda);
}

TEST(ConditionalProb, MatchesIntegralRatioOracle) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z(0.0, 1.5);
  for (int trial = 0; trial < 40; ++trial) {
    Theta theta{Eigen::Vector2d(z(rng), z(rng)), z(rng)};
    MatchedPair p{1, 0, {z(rng), z(rng)}, {z(rng), z(rng)}, trial % 2};
    EXPECT_NEAR(model::conditional_prob(theta, p), conditional_prob_oracle(theta, p), 1e-6) << trial;
  }
}

TEST(ConditionalProb, IndexAndSymmetry) {
  Theta theta{Eigen::VectorXd::Constant(1, 2.0), 0.7};
  MatchedPair p{1, 0, {1.0}, {0.5}, 1};
  EXPECT_DOUBLE_EQ(model::index_of(theta, p), 0.7 * -1.0 + 2.0 * (0.5 - 1.0));
  for (double s = -40.0; s <= 40.0; s += 0.5) {
    const double p1 = model::conditional_prob_at(s);
    EXPECT_NEAR(p1 + model::conditional_prob_at(-s), 1.0, 1e-14) << s;
    EXPECT_TRUE(p1 >= 0.0 && p1 <= 1.0);
  }
  EXPECT_DOUBLE_EQ(model::conditional_prob_at(0.0), 0.5);
}

TEST(ConditionalProb, SlopeMatchesFiniteDifference) {
  const double h = 1e-6;
  for (double s = -12.0; s <= 12.0; s += 0.75) {
    const double fd = (model::conditional_prob_at(s + h) - model::conditional_prob_at(s - h)) / (2 * h);
    EXPECT_NEAR(model::conditional_prob_slope(s), fd, 1e-6 * std::max(1e-3, std::fabs(fd))) << s;
  }
}

TEST(ConditionalProb, KIntegralIsSumOfG) {
  Theta theta{Eigen::VectorXd::Constant(1, 0.3), -0.4};
  MatchedPair p{1, 0, {1.0}, {-0.5}, 0};
  const double s = model::index_of(theta, p);
  const double oracle_sum = [&] {
    boost::math::quadrature::sinh_sinh<double> integrator;
    return std::sqrt(M_PI) *
           (integrator.integrate([&](double u) { return boost_cdf(u) * boost_cdf(-s - u); }, 1e-13) +
            integrator.integrate([&](double u) { return boost_cdf(u) * boost_cdf(s - u); }, 1e-13));
  }();
  EXPECT_NEAR(model::k_integral(theta, p), oracle_sum, 1e-9);
}

TEST(ConditionalLoglik, GradientMatchesFiniteDifferences) {
  const Dataset data = random_dataset(60, 3, 11);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 10; ++trial) {
    const Theta theta{Eigen::Vector3d(z(rng), z(rng), z(rng)), z(rng)};
    const Eigen::VectorXd grad = model::conditional_loglik_grad(theta, data);
    const Eigen::VectorXd v = theta.packed();
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      const double h = 1e-5;
      Eigen::VectorXd up = v, dn = v;
      up[j] += h;
      dn[j] -= h;
      const double fd = (model::conditional_loglik(Theta::unpack(up), data) -
                         model::conditional_loglik(Theta::unpack(dn), data)) / (2 * h);
      EXPECT_NEAR(grad[j], fd, 1e-6 * std::max(1.0, std::fabs(fd))) << trial << " " << j;
    }
  }
}

TEST(ConditionalLoglik, FarTailIsFinite) {
  const Dataset data = tally(3, 2);
  Theta theta = Theta::zero(0);
  theta.lambda = 45.0;
  EXPECT_TRUE(std::isfinite(model::conditional_loglik(theta, data)));
  EXPECT_TRUE(std::isfinite(model::conditional_loglik_grad(theta, data)[0]));
}

TEST(ConditionalLoglik, RequiresDiscordantPairs) {
  EXPECT_THROW(
      {
        try {
          model::conditional_loglik(Theta::zero(0), tally(0, 0, 3, 2));
        } catch (const Error& e) {
          EXPECT_EQ(e.kind(), ErrorKind::NoDiscordantPairs);
          throw;
        }
      },
      Error);
}

TEST(Invariance, ConcordantPairsDoNotMoveEstimate) {
  const Dataset base = random_dataset(80, 2, 5);
  std::vector<MatchedPair> extended = base.pairs();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z(0.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    extended.push_back({i % 2, i % 2, {z(rng), z(rng)}, {z(rng), z(rng)}, i % 3 == 0 ? 1 : 0});
  }
  const auto a = estimators::fit_conditional_mle(base);
  const auto b = estimators::fit_conditional_mle(Dataset(extended));
  ASSERT_TRUE(a.converged);
  ASSERT_TRUE(b.converged);
  EXPECT_NEAR(a.theta_hat.lambda, b.theta_hat.lambda, 1e-8);
  EXPECT_NEAR((a.theta_hat.beta - b.theta_hat.beta).norm(), 0.0, 1e-8);
  EXPECT_DOUBLE_EQ(a.loglik, b.loglik);
}

TEST(Invariance, SwappingMembersAndTreatmentLeavesEstimate) {
  const Dataset base = random_dataset(80, 2, 21);
  std::vector<MatchedPair> swapped;
  for (const auto& p : base.pairs()) swapped.push_back({p.y_b, p.y_a, p.x_b, p.x_a, 1 - p.d});
  const auto a = estimators::fit_conditional_mle(base);
  const auto b = estimators::fit_conditional_mle(Dataset(swapped));
  ASSERT_TRUE(a.converged);
  ASSERT_TRUE(b.converged);
  EXPECT_NEAR(a.theta_hat.lambda, b.theta_hat.lambda, 1e-8);
  EXPECT_NEAR((a.theta_hat.beta - b.theta_hat.beta).norm(), 0.0, 1e-8);
}

TEST(Identifiability, RankConditionDetectsCollinearity) {
  std::vector<MatchedPair> pairs;
  for (int i = 0; i < 10; ++i) {
    const double t = i - 4.5;
    pairs.push_back({i % 2, 1 - i % 2, {0.0, 0.0}, {t, 2.0 * t}, i % 2});
  }
  const auto report = model::check_identifiability(Dataset(pairs));
  EXPECT_FALSE(report.rank_ok);
  EXPECT_EQ(report.discordant_count, 10u);
}

TEST(Identifiability, ConeConditionHoldsForBalancedDifferences) {
  std::vector<MatchedPair> pairs{
      {1, 0, {0.0}, {1.0}, 1},
      {0, 1, {0.0}, {-1.0}, 1},
      {1, 0, {0.0}, {2.0}, 0},
  };
  const auto report = model::check_identifiability(Dataset(pairs));
  EXPECT_TRUE(report.rank_ok);
  EXPECT_TRUE(report.cone_ok);
}

TEST(Identifiability, ConeConditionFailsWhenAllDifferencesShareSign) {
  std::vector<MatchedPair> pairs{
      {1, 0, {0.0}, {1.0}, 1},
      {0, 1, {0.0}, {2.0}, 1},
      {1, 0, {0.0}, {3.0}, 0},
      {0, 1, {0.0}, {0.5}, 0},
  };
  const auto report = model::check_identifiability(Dataset(pairs));
  EXPECT_TRUE(report.rank_ok);
  EXPECT_FALSE(report.cone_ok);
}

TEST(Identifiability, ZeroDifferenceSatisfiesCone) {
  std::vector<MatchedPair> pairs{{1, 0, {1.0}, {1.0}, 1}, {0, 1, {0.0}, {2.0}, 0}};
  EXPECT_TRUE(model::check_identifiability(Dataset(pairs)).cone_ok);
}

TEST(Identifiability, NoCovariatesNeedsOnlyDiscordance) {
  EXPECT_TRUE(model::check_identifiability(tally(1, 0)).cone_ok);
  const auto none = model::check_identifiability(tally(0, 0, 2, 2));
  EXPECT_FALSE(none.rank_ok);
  EXPECT_FALSE(none.cone_ok);
}

TEST(NonnegativeCombination, AgreesWithHandCases) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 0, 0, 1;
  EXPECT_TRUE(model::nonnegative_combination_exists(a, Eigen::Vector2d(2, 3)));
  EXPECT_FALSE(model::nonnegative_combination_exists(a, Eigen::Vector2d(-1, 3)));
  Eigen::MatrixXd b(2, 3);
  b << 1, -1, 0, 1, 1, -1;
  EXPECT_TRUE(model::nonnegative_combination_exists(b, Eigen::Vector2d(-1, 3)));
  EXPECT_TRUE(model::nonnegative_combination_exists(Eigen::MatrixXd(2, 0), Eigen::Vector2d(0, 0)));
  EXPECT_FALSE(model::nonnegative_combination_exists(Eigen::MatrixXd(2, 0), Eigen::Vector2d(0, 1)));
}
