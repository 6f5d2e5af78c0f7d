#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "glasslab/common.hpp"

namespace glasslab::analytic {

/// Returned by nonglassy_p_threshold when no p up to kMaxThresholdP qualifies.
inline constexpr int kNoThreshold = std::numeric_limits<int>::max();
inline constexpr int kMaxThresholdP = 64;

/// Tr T exp[alpha (int_0^1 sigma)^2] = 2 (1 + alpha/2) e^{alpha/4}.
double bray_moore_trace(double alpha);

/// Variational upper bound on the free energy for a trial kernel value G.
double variational_free_energy(double G, double betaJ, int p, double J = 1.0);

/// Stationary point of the p = 3 variational bound.
double g_opt(double betaJ);

/// Kernel value at which the RS solution becomes marginally stable.
double marginal_G(double betaJ, int p, double q0);

/// betaJ solving marginal_G(betaJ, 3, q0) = g_opt(betaJ), bisection on [0.1, 100].
double transition_estimate(int p, double q0);

/// Numerical minimizer of variational_free_energy over G in [0, 3] for any p.
struct FreeEnergyMinimum {
  double G;
  double F;
};
FreeEnergyMinimum minimize_free_energy(double betaJ, int p, double J = 1.0);

/// (1 - lambda + lambda log lambda) / (1 - lambda)^2, with its series near lambda = 1.
double lsi_factor(double lambda);
double lsi_lambda(double betaJ, double q1, int p);

/// Sharpened log-Sobolev lower bound on the TAP complexity. Throws DomainError when lambda <= 0.
double lsi_S_lower(double betaJ, double q1, int p);
double gaussian_lsi_S_lower(double betaJ, double q1, int p);

/// Smallest p >= 3 with lambda(p) > 0 and lsi_S_lower > 0, or kNoThreshold.
int nonglassy_p_threshold(double betaJ, double q1);

struct AnalyticReport {
  std::string formula;
  std::map<std::string, double> inputs;
  std::map<std::string, double> outputs;
};

nlohmann::json to_json(const AnalyticReport& r);

AnalyticReport transition_report(int p, double q0);

struct LsiRow {
  int p;
  double lambda;
  bool in_regime;
  double S_lower;           // NaN outside the regime
  double gaussian_S_lower;
};
std::vector<LsiRow> lsi_table(double betaJ, double q1, int p_max);
nlohmann::json lsi_json(double betaJ, double q1, int p_max);

}  // namespace glasslab::analytic
