#include "pairprobit/tau_distribution.hpp"

#include <boost/random/cauchy_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/student_t_distribution.hpp>
#include <boost/random/uniform_01.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "pairprobit/error.hpp"

namespace pairprobit {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double normal_pdf(double x, double mean, double variance) {
  const double sd = std::sqrt(variance);
  const double z = (x - mean) / sd;
  return std::exp(-0.5 * z * z) / (sd * std::sqrt(2.0 * std::numbers::pi));
}

double normal_draw(std::mt19937_64& rng, double mean, double variance) {
  if (variance == 0.0) return mean;
  boost::random::normal_distribution<double> dist(mean, std::sqrt(variance));
  return dist(rng);
}

std::string format_number(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

TauDistribution TauDistribution::uniform(double a, double b) {
  TauDistribution t{Uniform{a, b}};
  t.validate();
  return t;
}

TauDistribution TauDistribution::normal(double mean, double variance) {
  TauDistribution t{Normal{mean, variance}};
  t.validate();
  return t;
}

TauDistribution TauDistribution::student_t(double df) {
  TauDistribution t{StudentT{df}};
  t.validate();
  return t;
}

TauDistribution TauDistribution::cauchy() { return TauDistribution{Cauchy{}}; }

TauDistribution TauDistribution::mixture(double p, double mean1, double variance1, double mean2,
                                         double variance2) {
  TauDistribution t{NormalMixture{p, mean1, variance1, mean2, variance2}};
  t.validate();
  return t;
}

void TauDistribution::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidArgument, msg); };
  std::visit(overloaded{
                 [&](const Uniform& u) {
                   if (!(u.b > u.a)) fail("uniform tau law needs b > a");
                 },
                 [&](const Normal& n) {
                   if (!(n.variance >= 0.0) || !std::isfinite(n.mean)) fail("normal tau law needs variance >= 0");
                 },
                 [&](const StudentT& t) {
                   if (!(t.df > 0.0)) fail("student-t tau law needs df > 0");
                 },
                 [](const Cauchy&) {},
                 [&](const NormalMixture& m) {
                   if (!(m.p >= 0.0 && m.p <= 1.0)) fail("mixture weight must lie in [0, 1]");
                   if (!(m.variance1 >= 0.0 && m.variance2 >= 0.0)) fail("mixture variances must be >= 0");
                 },
             },
             kind);
}

TauDistribution TauDistribution::parse(const std::string& text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  const auto open = s.find('(');
  const std::string name = s.substr(0, open);
  std::vector<double> args;
  if (open != std::string::npos) {
    if (s.back() != ')') throw Error(ErrorKind::Parse, "tau law '" + text + "': missing ')'");
    std::stringstream inner(s.substr(open + 1, s.size() - open - 2));
    std::string item;
    while (std::getline(inner, item, ',')) {
      try {
        std::size_t used = 0;
        args.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw Error(ErrorKind::Parse, "tau law '" + text + "': bad number '" + item + "'");
      }
    }
  }
  auto want = [&](std::size_t n) {
    if (args.size() != n) {
      throw Error(ErrorKind::Parse, "tau law '" + text + "' expects " + std::to_string(n) + " arguments");
    }
  };
  if (name == "uniform" || name == "u") {
    want(2);
    return uniform(args[0], args[1]);
  }
  if (name == "normal" || name == "n") {
    want(2);
    return normal(args[0], args[1]);
  }
  if (name == "t" || name == "student_t") {
    want(1);
    return student_t(args[0]);
  }
  if (name == "cauchy") {
    want(0);
    return cauchy();
  }
  if (name == "mixture") {
    want(5);
    return mixture(args[0], args[1], args[2], args[3], args[4]);
  }
  throw Error(ErrorKind::Parse, "unknown tau law '" + text + "'");
}

std::string TauDistribution::to_string() const {
  auto f = format_number;
  return std::visit(
      overloaded{
          [&](const Uniform& u) { return "uniform(" + f(u.a) + "," + f(u.b) + ")"; },
          [&](const Normal& n) { return "normal(" + f(n.mean) + "," + f(n.variance) + ")"; },
          [&](const StudentT& t) { return "t(" + f(t.df) + ")"; },
          [](const Cauchy&) { return std::string("cauchy"); },
          [&](const NormalMixture& m) {
            return "mixture(" + f(m.p) + "," + f(m.mean1) + "," + f(m.variance1) + "," + f(m.mean2) +
                   "," + f(m.variance2) + ")";
          },
      },
      kind);
}

double TauDistribution::pdf(double x) const {
  return std::visit(
      overloaded{
          [&](const Uniform& u) { return (x >= u.a && x <= u.b) ? 1.0 / (u.b - u.a) : 0.0; },
          [&](const Normal& n) { return normal_pdf(x, n.mean, n.variance); },
          [&](const StudentT& t) {
            const double v = t.df;
            const double log_c = std::lgamma((v + 1.0) / 2.0) - std::lgamma(v / 2.0) -
                                 0.5 * std::log(v * std::numbers::pi);
            return std::exp(log_c - (v + 1.0) / 2.0 * std::log1p(x * x / v));
          },
          [&](const Cauchy&) { return 1.0 / (std::numbers::pi * (1.0 + x * x)); },
          [&](const NormalMixture& m) {
            return m.p * normal_pdf(x, m.mean1, m.variance1) +
                   (1.0 - m.p) * normal_pdf(x, m.mean2, m.variance2);
          },
      },
      kind);
}

double TauDistribution::sample(std::mt19937_64& rng) const {
  return std::visit(
      overloaded{
          [&](const Uniform& u) {
            boost::random::uniform_real_distribution<double> dist(u.a, u.b);
            return dist(rng);
          },
          [&](const Normal& n) { return normal_draw(rng, n.mean, n.variance); },
          [&](const StudentT& t) {
            boost::random::student_t_distribution<double> dist(t.df);
            return dist(rng);
          },
          [&](const Cauchy&) {
            boost::random::cauchy_distribution<double> dist(0.0, 1.0);
            return dist(rng);
          },
          [&](const NormalMixture& m) {
            boost::random::uniform_01<double> coin;
            return coin(rng) < m.p ? normal_draw(rng, m.mean1, m.variance1)
                                   : normal_draw(rng, m.mean2, m.variance2);
          },
      },
      kind);
}

}  // namespace pairprobit
