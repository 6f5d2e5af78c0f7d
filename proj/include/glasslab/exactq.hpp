#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "glasslab/common.hpp"
#include "glasslab/pauli.hpp"
#include "glasslab/state.hpp"

namespace glasslab::exactq {

struct GibbsResult {
  DensityState state;
  double log_z = 0.0;
  double free_energy = 0.0;  // -log Z / beta, -inf at beta = 0
};

GibbsResult gibbs_state(const pauli::PauliHamiltonian& h, double beta, int dense_cap = pauli::kDefaultDenseCap);
/// Same from an explicit Hermitian matrix on n qubits.
GibbsResult gibbs_state(const Matrix& h, int n, double beta);

/// Named rate function gamma(beta) on a declared interval [beta_min, beta_max].
///   constant:   a
///   linear:     a + b beta
///   metropolis: a exp(-b beta), b >= 0
struct RateSchedule {
  enum class Kind { Constant, Linear, Metropolis };
  Kind kind = Kind::Constant;
  double a = 1.0;
  double b = 0.0;
  double beta_min = 0.0;
  double beta_max = 10.0;

  static RateSchedule constant(double rate, double beta_min = 0.0, double beta_max = 10.0);
  static RateSchedule linear(double offset, double slope, double beta_min = 0.0, double beta_max = 10.0);
  static RateSchedule metropolis(double prefactor, double gap, double beta_min = 0.0, double beta_max = 10.0);

  /// Throws DomainError outside [beta_min, beta_max].
  double operator()(double beta) const;
  /// Lipschitz constant on the declared interval.
  double lipschitz() const;
  bool contains(double beta) const { return beta >= beta_min && beta <= beta_max; }
  void validate() const;
};

/// Jump operator given on its support: `op` acts on qubits support[0], support[1], ...
/// with support[k] carried by bit k of the local basis index.
struct Jump {
  Matrix op;
  std::vector<int> support;
  RateSchedule rate;

  double op_norm() const;
};

struct LindbladSpec {
  int n = 1;
  Matrix hamiltonian;  // 2^n x 2^n; empty means zero
  std::vector<Jump> jumps;
  double max_jumps_per_qubit = 8.0;

  void validate() const;
  /// (3/2) sum_i lambda_i |supp A_i| ||A_i||^2, the per-unit-time stability rate.
  double stability_rate() const;
};

/// Embed an operator given on `support` into the full n-qubit space.
Matrix embed(const Matrix& op, const std::vector<int>& support, int n);

/// Column-stacking superoperator of L_beta: vec(L[rho]) = S vec(rho).
Matrix lindbladian_superoperator(const LindbladSpec& spec, double beta);

enum class Backend { Auto, Superoperator, Ode };

struct EvolveOptions {
  Backend backend = Backend::Auto;
  int max_qubits = 6;
  int superoperator_cap = 4096;  // largest 4^n handled by the matrix exponential under Auto
  double ode_tolerance = 1e-10;
};

/// exp(t L_beta)[rho0].
DensityState lindblad_evolve(const LindbladSpec& spec, double beta, const DensityState& rho0, double t,
                             const EvolveOptions& options = {});

/// Gate exp(-i theta G) on `qubits`, G Hermitian on the gate's local space.
struct Gate {
  std::vector<int> qubits;
  Matrix generator;
};

/// One round: K sublayers of gates followed (in time) after a Lindblad segment exp(L_beta).
struct ShallowLayer {
  std::vector<std::vector<Gate>> sublayers;
  LindbladSpec lindblad;
};

struct ShallowCircuitSpec {
  int n = 1;
  DensityState rho0 = DensityState::maximally_mixed(1);
  std::vector<ShallowLayer> layers;
  int depth = 1;     // K
  int locality = 2;  // d
  int degree = 2;    // hypergraph degree

  int parameter_count() const;
  void validate() const;
  /// max over layers of sum_i lambda_i.
  double lambda() const;
  /// 6^p (d degree)^{K p} lambda with p the number of layers.
  double stability_constant() const;
};

Matrix gate_unitary(const Gate& g, double theta, int n);
/// Product of all gates of one layer (later sublayers applied after earlier ones).
Matrix layer_unitary(const ShallowLayer& layer, const std::vector<double>& theta, std::size_t& offset, int n);

/// Layer by layer: rho <- U_l exp(L_{l,beta})[rho].
DensityState shallow_evolve(const ShallowCircuitSpec& spec, double beta, const std::vector<double>& theta,
                            const EvolveOptions& options = {});

/// (3/2) max_i |I_i| with I_i the forward light cone of qubit i through the layer's gates.
double light_cone_norm_bound(const ShallowLayer& layer, int n);
int light_cone_size(const ShallowLayer& layer, int n, int qubit);

struct StabilityPair {
  double beta;
  double beta_prime;
  double measured;  // transport::w1_lower between the two outputs
  double budget;    // L |beta - beta'|
  bool pass;
};

struct StabilityReport {
  std::string algorithm;
  double lipschitz = 0.0;
  std::vector<StabilityPair> pairs;
  bool all_pass() const;
};

/// Lindblad algorithm exp(t L_beta)[rho0] over all pairs from `betas` at most `max_separation` apart,
/// budget (3t/2) sum lambda |S| ||A||^2 |beta - beta'|.
StabilityReport lindblad_stability(const LindbladSpec& spec, const DensityState& rho0, double t,
                                   const std::vector<double>& betas, double max_separation = 0.5,
                                   const EvolveOptions& options = {});
/// Shallow algorithm over the same pairs, budget 6^p (d degree)^{Kp} lambda |beta - beta'|.
StabilityReport shallow_stability(const ShallowCircuitSpec& spec, const std::vector<double>& theta,
                                  const std::vector<double>& betas, double max_separation = 0.5,
                                  const EvolveOptions& options = {});

nlohmann::json to_json(const StabilityReport& r);

/// Random instance used by the experiment drivers: random 2-local Hamiltonian part,
/// n jumps drawn from sigma^-, sigma^+, Z and random 2-local operators, random schedules on [0, beta_max].
LindbladSpec random_lindblad(int n, CounterRng& rng, double beta_max = 10.0);
/// Brickwork shallow circuit with `layers` rounds of depth-2 nearest-neighbour gates and
/// commuting 1-local dephasing or damping jumps on every qubit.
ShallowCircuitSpec random_shallow(int n, int layers, CounterRng& rng, double beta_max = 10.0);

}  // namespace glasslab::exactq
