#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "glasslab/common.hpp"
#include "glasslab/state.hpp"

namespace glasslab::transport {

/// sum over qubits r and directions mu of Tr[sigma_r^mu rho] Tr[sigma_r^mu sigma].
double pauli_inner(const DensityState& rho, const DensityState& sigma);

/// Squared Pauli seminorm of rho - sigma; tiny negative round-off is clamped to 0.
double pauli_sq_dist(const DensityState& rho, const DensityState& sigma);

/// The two lower bounds that w1_lower takes the max of.
struct W1LowerParts {
  double pauli_quarter;   // (1/4) ||rho - sigma||_Pauli^2
  double marginal_trace;  // (1/2) sum_r ||rho_r - sigma_r||_1
};
W1LowerParts w1_lower_parts(const DensityState& rho, const DensityState& sigma);
double w1_lower(const DensityState& rho, const DensityState& sigma);

/// (3n/4) ||rho - sigma||_1.
double w1_upper(const DensityState& rho, const DensityState& sigma);

struct ExactW1Options {
  double gap_tolerance = 1e-6;
  int max_iterations = 100000;
  int check_every = 10;
};

struct ExactW1Result {
  double value;       // primal objective of a feasible decomposition
  double dual_bound;  // certified lower bound
  double gap;
  int iterations;
};

/// Exact quantum W1 distance for n <= 3 by ADMM on the decomposition
/// rho - sigma = sum_i X_i, Tr_i X_i = 0, minimizing (1/2) sum_i ||X_i||_1.
/// Throws NumericalError if the duality gap does not close within the iteration cap.
ExactW1Result w1_exact_small(const DensityState& rho, const DensityState& sigma, const ExactW1Options& options = {});

struct W1Bracket {
  double lower;
  double upper;
  std::string lower_method;
  std::string upper_method;
};
W1Bracket w1_bracket(const DensityState& rho, const DensityState& sigma, bool exact = false);

struct Witness {
  std::vector<Matrix> observables;  // one 2x2 observable per qubit
  double gap;                       // sum_r Tr[X_r (rho_i - rho_j)]
};

/// One-local witness X_r = v_r v_r^dagger - w_r w_r^dagger built from the eigenvectors of the
/// marginal difference; X_r = 0 where the marginals agree.
Witness witness_observable(const DensityState& rho_i, const DensityState& rho_j);

using Channel = std::function<DensityState(const DensityState&)>;

/// Lower bound on the Wasserstein complexity sup_rho ||rho - Phi(rho)||_W1 over the probes.
double wc_lower(const Channel& channel, const std::vector<DensityState>& probes);

/// Computational basis states (all of them when 2^n <= max_basis), |+...+>, the maximally mixed
/// state and, when given, eigenvectors of `hamiltonian`.
std::vector<DensityState> default_probes(int n, const std::optional<Matrix>& hamiltonian = std::nullopt,
                                         int max_basis = 64);

}  // namespace glasslab::transport
