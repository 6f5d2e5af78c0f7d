#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "glasslab/common.hpp"
#include "glasslab/pauli.hpp"
#include "glasslab/state.hpp"
#include "glasslab/transport.hpp"

namespace glasslab::glass {

/// Comparisons against eps, q and R allow this much round-off.
inline constexpr double kCheckSlack = 1e-9;

struct Cluster {
  double weight;
  DensityState state;
};

struct ClusterDecomposition {
  std::vector<Cluster> clusters;
  double eps_achieved = 0.0;  // (1/2) || rho - sum c_i rho_i ||_1
  double q_achieved = 0.0;    // min_{i != j} (1/n) ||rho_i - rho_j||_Pauli^2, +inf when M = 1
  double ratio = 1.0;         // max c_i / min c_i

  int M() const { return static_cast<int>(clusters.size()); }
};

struct DecompositionReport {
  int M = 0;
  bool multiple_clusters = false;  // M >= 2
  bool weights_valid = false;      // c_i > 0, sum c_i <= 1 + 1e-9
  double eps_measured = 0.0;
  bool eps_ok = false;
  double q_measured = 0.0;
  bool separation_ok = false;
  double ratio = 0.0;
  bool ratio_ok = false;
  bool pass = false;
};

DecompositionReport check_decomposition(const DensityState& rho, const ClusterDecomposition& cand, double eps, double q,
                                        double ratio_cap = 100.0);

/// Fills eps_achieved, q_achieved and ratio of `cand` against `rho`.
void measure(const DensityState& rho, ClusterDecomposition& cand);

struct DetectOptions {
  double weight_floor = 1e-3;
  /// Eigenvalue gap below which eigenvectors are treated as degenerate; degenerate
  /// eigenspaces are resolved by diagonalizing a fixed generic one-local field inside them.
  double degeneracy_tol = 1e-10;
};

/// Single-linkage agglomeration of the eigenvectors of rho: two eigenvectors join when their
/// pure-state Pauli distance per qubit is below q. Components lighter than weight_floor go to the residual.
ClusterDecomposition detect_clusters(const DensityState& rho, double q, const DetectOptions& options = {});

/// Cluster summary without forming the dense cluster states.
struct ClusterSummary {
  int M = 0;
  double eps_achieved = 0.0;
  double q_achieved = 0.0;
  std::vector<double> weights;
};
ClusterSummary summarize_clusters(const DensityState& rho, double q, const DetectOptions& options = {});

/// True unless cand witnesses (eps, q) for rho, (1/2)||rho - rho_tilde||_1 <= delta, and yet
/// check_decomposition(rho_tilde, cand, eps + delta, q, ratio_cap) fails.
bool robustness_check(const DensityState& rho, const DensityState& rho_tilde, const ClusterDecomposition& cand,
                      double eps, double delta, double q, double ratio_cap = 100.0);

/// Wasserstein-complexity budget (3/4) k D of a channel acting on k qubits with
/// sup_rho ||rho - Phi(rho)||_1 <= D.
double local_channel_wc_budget(int k, double trace_displacement = 2.0);

enum class PreservationStatus { Pass, Fail, Inconclusive };
std::string to_string(PreservationStatus s);

struct PreservationReport {
  PreservationStatus status = PreservationStatus::Inconclusive;
  double budget = 0.0;           // declared WC upper bound
  double budget_cap = 0.0;       // q n / 144
  bool budget_certified = false;
  double wc_lower = 0.0;         // probe lower bound on WC
  double image_q = 0.0;          // min separation per qubit of the image clusters
  double image_eps = 0.0;
  bool image_pass = false;       // check with eps and 4q/9
  double triangle_bound = 0.0;   // (sqrt(q) - 4 sqrt(b / n))^2, floored at 0
};

/// Pushes cand through `channel` and checks the image against eps and 4q/9.
/// Without a declared budget, or with one above qn/144, the status is Inconclusive.
PreservationReport channel_preservation_check(const DensityState& rho, const ClusterDecomposition& cand,
                                              const transport::Channel& channel, double eps, double q,
                                              std::optional<double> budget,
                                              const std::vector<DensityState>& probes = {});

/// Classical p-spin instance: one Gaussian coefficient (same variance as the Pauli ensemble) per
/// weight-p Z-string.
pauli::PauliHamiltonian classical_pspin(int n, int p, double J, std::uint64_t seed);

struct ScanConfig {
  int n = 6;
  int p = 3;
  double J = 1.0;
  bool classical = false;
  std::vector<double> betas;
  std::vector<std::uint64_t> seeds;
  double q = 1.0;
  DetectOptions detect;
};

struct ScanRow {
  std::uint64_t seed;
  double beta;
  int M;
  double q_achieved;
  double eps_achieved;
  double self_overlap;  // (1/n) pauli_inner(rho, rho)
};

std::vector<ScanRow> transition_scan(const ScanConfig& config);
std::string scan_csv(const std::vector<ScanRow>& rows);
nlohmann::json scan_json(const std::vector<ScanRow>& rows);

/// The n-qubit fixture (1/2)|0...0><0...0| + (1/2)|1...1><1...1| with its two product clusters.
ClusterDecomposition two_cluster_fixture(int n, DensityState* rho = nullptr);

}  // namespace glasslab::glass
