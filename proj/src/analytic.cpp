#include "glasslab/analytic.hpp"

#include <cmath>

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>

namespace glasslab::analytic {

double bray_moore_trace(double alpha) {
  require(alpha >= 0.0, "alpha must be nonnegative");
  return 2.0 * (1.0 + alpha / 2.0) * std::exp(alpha / 4.0);
}

double variational_free_energy(double G, double betaJ, int p, double J) {
  require(G >= 0.0, "G must be nonnegative");
  require(betaJ > 0.0 && J > 0.0, "betaJ and J must be positive");
  require(p >= 2, "p must be at least 2");
  const double beta = betaJ / J;
  const double x = betaJ * betaJ * std::pow(G, p - 1);
  return 0.5 * beta * J * J * (1.0 - 1.0 / p) * std::pow(G, p) -
         (std::log(2.0 * (1.0 + x / 4.0)) + x / 8.0) / beta;
}

double g_opt(double betaJ) {
  require(betaJ > 0.0, "betaJ must be positive");
  const double x = betaJ;
  const double a = x * x * x + 24.0 * std::sqrt(9.0 * x * x * x * x + 9024.0 * x * x + 12288.0) + 2304.0 * x;
  const double c = std::cbrt(a);
  return (x * x + x * c + c * c - 192.0) / (12.0 * x * c);
}

double marginal_G(double betaJ, int p, double q0) {
  require(betaJ > 0.0, "betaJ must be positive");
  require(p >= 3, "p must be at least 3");
  require(q0 > 0.0, "q0 must be positive");
  return std::sqrt(6.0 * (p - 1) / (p * std::pow(q0, p - 2))) / betaJ;
}

double transition_estimate(int p, double q0) {
  require(p == 3, "transition estimate is available for p = 3 only");
  auto f = [&](double x) { return marginal_G(x, p, q0) - g_opt(x); };
  const double lo = 0.1, hi = 100.0;
  if (std::signbit(f(lo)) == std::signbit(f(hi))) throw DomainError("no sign change of the transition equation on [0.1, 100]");
  auto tol = [](double a, double b) { return std::abs(b - a) < 1e-6; };
  const auto bracket = boost::math::tools::bisect(f, lo, hi, tol);
  return 0.5 * (bracket.first + bracket.second);
}

FreeEnergyMinimum minimize_free_energy(double betaJ, int p, double J) {
  require(betaJ > 0.0 && J > 0.0, "betaJ and J must be positive");
  const auto r = boost::math::tools::brent_find_minima(
      [&](double g) { return variational_free_energy(g, betaJ, p, J); }, 0.0, 3.0, 52);
  return {r.first, r.second};
}

double lsi_factor(double lambda) {
  require(lambda > 0.0, "lambda must be positive");
  const double e = 1.0 - lambda;
  if (std::abs(e) < 1e-4) {
    double sum = 0.0, power = 1.0;
    for (int k = 2; k < 8; ++k) {
      sum += power / (k * (k - 1.0));
      power *= e;
    }
    return sum;
  }
  return (e + lambda * std::log(lambda)) / (e * e);
}

double lsi_lambda(double betaJ, double q1, int p) {
  require(betaJ > 0.0, "betaJ must be positive");
  require(q1 >= 0.0 && q1 <= 3.0, "q1 must lie in [0, 3]");
  require(p >= 2, "p must be at least 2");
  return 1.0 - betaJ * betaJ * std::pow(q1, p - 1);
}

double lsi_S_lower(double betaJ, double q1, int p) {
  const double lambda = lsi_lambda(betaJ, q1, p);
  if (!(lambda > 0.0)) throw DomainError("log-Sobolev bound needs (betaJ)^2 q1^(p-1) < 1");
  return 0.5 * betaJ * betaJ * std::pow(q1, p) * (1.0 - 1.0 / p - lsi_factor(lambda));
}

double gaussian_lsi_S_lower(double betaJ, double q1, int p) {
  require(p >= 1, "p must be positive");
  return -betaJ * betaJ * std::pow(q1, p) / (2.0 * p);
}

int nonglassy_p_threshold(double betaJ, double q1) {
  for (int p = 3; p <= kMaxThresholdP; ++p) {
    if (!(lsi_lambda(betaJ, q1, p) > 0.0)) continue;
    if (q1 == 0.0) {
      if (0.5 - 1.0 / p > 0.0) return p;
      continue;
    }
    if (lsi_S_lower(betaJ, q1, p) > 0.0) return p;
  }
  return kNoThreshold;
}

nlohmann::json to_json(const AnalyticReport& r) {
  return {{"schema", "glasslab.analytic_report"},
          {"version", 1},
          {"formula", r.formula},
          {"inputs", r.inputs},
          {"outputs", r.outputs}};
}

AnalyticReport transition_report(int p, double q0) {
  AnalyticReport r;
  r.formula = "marginal_G = g_opt";
  r.inputs = {{"p", p}, {"q0", q0}};
  const double x = transition_estimate(p, q0);
  r.outputs = {{"betaJ", x}, {"G", g_opt(x)}, {"F_over_beta", variational_free_energy(g_opt(x), x, p) / x}};
  return r;
}

std::vector<LsiRow> lsi_table(double betaJ, double q1, int p_max) {
  require(p_max >= 3, "p_max must be at least 3");
  std::vector<LsiRow> rows;
  for (int p = 3; p <= p_max; ++p) {
    LsiRow row{p, lsi_lambda(betaJ, q1, p), false, std::numeric_limits<double>::quiet_NaN(),
               gaussian_lsi_S_lower(betaJ, q1, p)};
    row.in_regime = row.lambda > 0.0;
    if (row.in_regime) row.S_lower = lsi_S_lower(betaJ, q1, p);
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json lsi_json(double betaJ, double q1, int p_max) {
  nlohmann::json rows = nlohmann::json::array();
  for (const LsiRow& r : lsi_table(betaJ, q1, p_max))
    rows.push_back({{"p", r.p},
                    {"lambda", r.lambda},
                    {"in_regime", r.in_regime},
                    {"S_lower", r.in_regime ? nlohmann::json(r.S_lower) : nlohmann::json(nullptr)},
                    {"gaussian_S_lower", r.gaussian_S_lower}});
  const int threshold = nonglassy_p_threshold(betaJ, q1);
  return {{"schema", "glasslab.lsi_table"},
          {"version", 1},
          {"betaJ", betaJ},
          {"q1", q1},
          {"threshold_p", threshold == kNoThreshold ? nlohmann::json(nullptr) : nlohmann::json(threshold)},
          {"rows", rows}};
}

}  // namespace glasslab::analytic
