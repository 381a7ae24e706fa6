#pragma once

#include <random>
#include <string>
#include <variant>

namespace pairprobit {

/// Law of the pair-level group effect. Normal laws are parametrized by
/// variance, matching the N(mean, variance) notation of the scenario tables.
struct TauDistribution {
  struct Uniform {
    double a;
    double b;
  };
  struct Normal {
    double mean;
    double variance;
  };
  struct StudentT {
    double df;
  };
  struct Cauchy {};
  struct NormalMixture {
    double p;
    double mean1;
    double variance1;
    double mean2;
    double variance2;
  };
  using Kind = std::variant<Uniform, Normal, StudentT, Cauchy, NormalMixture>;

  Kind kind;

  static TauDistribution uniform(double a, double b);
  static TauDistribution normal(double mean, double variance);
  static TauDistribution student_t(double df);
  static TauDistribution cauchy();
  static TauDistribution mixture(double p, double mean1, double variance1, double mean2,
                                 double variance2);

  /// Parses `uniform(a,b)`, `normal(mean,variance)`, `t(df)`, `cauchy`,
  /// `mixture(p,mean1,var1,mean2,var2)`. Throws Error(Parse) on bad input and
  /// Error(InvalidArgument) on invalid parameters.
  static TauDistribution parse(const std::string& text);

  /// Canonical text form accepted by parse().
  std::string to_string() const;

  double pdf(double x) const;

  /// Draws one value. Uses Boost.Random distributions so the stream is the
  /// same on every standard library.
  double sample(std::mt19937_64& rng) const;

  /// Throws Error(InvalidArgument) unless b > a, variances >= 0, df > 0 and
  /// p in [0, 1].
  void validate() const;
};

}  // namespace pairprobit
