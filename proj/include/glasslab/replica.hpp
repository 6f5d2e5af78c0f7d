#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "glasslab/common.hpp"
#include "glasslab/rng.hpp"

namespace glasslab::replica {

/// Periodic imaginary-time kernel on the grid tau_k = k beta / n_tau, k = 0..n_tau-1.
struct ImaginaryTimeKernel {
  double beta = 1.0;
  double J = 1.0;
  int p = 3;
  std::vector<double> G;
  std::vector<double> Sigma;  // J^2 G^{p-1}
  double q0 = 0.0;
  double q0_hat = 0.0;        // J^2 q0^{p-1}

  int n_tau() const { return static_cast<int>(G.size()); }
  double dtau() const { return beta / static_cast<double>(G.size()); }
  /// Recompute Sigma and q0_hat from G and q0.
  void refresh();
  /// Largest |G(tau) - G(beta - tau)|.
  double asymmetry() const;
};

/// Kernel with a caller-chosen Sigma (for example a constant covariance); G is left at 3.
ImaginaryTimeKernel kernel_with_sigma(double beta, std::vector<double> sigma, double q0_hat = 0.0);

double liouville_b(int p);
/// Large-p closed-form G(tau) with G(0) = 3, q0 = 0.
ImaginaryTimeKernel liouville_init(double beta, double J, int p, int n_tau);

/// Spectral sampler for a stationary periodic Gaussian process.
/// Negative spectral weights are clipped to zero; the clipped share of the spectral mass is reported.
/// With include_static = false the zero-frequency (time-constant) mode is left out of the paths
/// and its per-component variance is exposed so callers can sample it separately.
class PathSampler {
public:
  explicit PathSampler(const std::vector<double>& covariance, bool include_static = true);
  ~PathSampler();
  PathSampler(const PathSampler&) = delete;
  PathSampler& operator=(const PathSampler&) = delete;

  int size() const { return n_; }
  double clipped_fraction() const { return clipped_; }
  double static_variance() const { return static_variance_; }
  /// Two independent paths from one complex transform.
  void sample_pair(CounterRng& rng, double* first, double* second);

private:
  int n_;
  std::vector<double> amplitude_;
  double clipped_ = 0.0;
  double static_variance_ = 0.0;
  void* plan_ = nullptr;
  void* in_ = nullptr;
  void* out_ = nullptr;
};

/// One xi realization: three field components on the tau grid.
using XiPath = std::array<std::vector<double>, 3>;

struct SingleSiteEstimate {
  double log_zeta = 0.0;                // log E_xi Tr T exp[int (z + xi) . sigma]
  std::array<double, 3> a{};            // a_nu(z; tau), translation averaged
  std::array<double, 3> a_first{};      // same from the first half of the samples
  std::array<double, 3> a_second{};     // and from the second half
  std::vector<double> G;                // sum_nu a_nu(z; tau_k, 0)
  double negative_weight_fraction = 0.0;
  double max_abs_a_sample = 0.0;        // largest per-sample |Tr[sigma U]| / Tr U
};

/// Ratio estimators of zeta and the Pauli insertions from the given xi samples.
/// Per-slice propagators are the exact 2x2 exponentials of the piecewise-constant field.
SingleSiteEstimate single_site_correlators(const ImaginaryTimeKernel& kernel, const std::array<double, 3>& z,
                                           const std::vector<XiPath>& xi_paths);

struct RsSolverConfig {
  int n_tau = 256;
  int n_z = 512;
  int n_xi = 64;
  double mixing = 0.3;
  double tolerance = 5e-3;
  int max_iters = 200;
  std::uint64_t seed = 1;
  /// Starting overlap; q0 = 0 is a fixed point of the RS map for p >= 3.
  double q0_init = 1.0;
  /// Starting kernel; Liouville profile when empty.
  std::optional<ImaginaryTimeKernel> init;
  double clip_budget = 0.1;
  int threads = 1;

  void validate() const;
};

struct RsIterateDiagnostics {
  double residual_G = 0.0;
  double residual_q0 = 0.0;
  double q0_new = 0.0;
  double q0_stderr = 0.0;
  double G_stderr_max = 0.0;
  double clipped_fraction = 0.0;
  double negative_weight_fraction = 0.0;
  double max_abs_a = 0.0;
  std::vector<double> G_new;
};

/// Evaluate the right-hand sides of the RS equations on `kernel` without mixing.
/// Random streams depend only on the config seed and sample indices, so the map is deterministic.
RsIterateDiagnostics rs_map(const ImaginaryTimeKernel& kernel, const RsSolverConfig& config);

/// One damped sweep: kernel <- (1 - alpha) kernel + alpha * map(kernel).
RsIterateDiagnostics rs_iterate(ImaginaryTimeKernel& kernel, const RsSolverConfig& config);

struct RsSolveReport {
  ImaginaryTimeKernel kernel;
  int iterations = 0;
  bool converged = false;
  bool oscillating = false;
  double residual = 0.0;
  double q0_stderr = 0.0;
  double clipped_fraction = 0.0;
  std::vector<double> q0_history;
};

RsSolveReport rs_solve(double beta, double J, int p, const RsSolverConfig& config);

struct RsScanPoint {
  double beta = 0.0;
  bool ok = false;
  std::string error;
  RsSolveReport report;
};

/// Temperature continuation: betas are solved in ascending order, each one seeded with the previous
/// solution and with q0 raised to at least q0_seed. config.init is ignored.
std::vector<RsScanPoint> rs_scan(std::vector<double> betas, double J, int p, const RsSolverConfig& config,
                                 double q0_seed = 0.5);

/// Smallest beta whose converged q0 exceeds `threshold`, or NaN.
double scan_crossover(const std::vector<RsScanPoint>& points, double threshold = 0.15);

struct TapConfig {
  int n_z = 512;
  int n_xi = 64;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct TapResult {
  double S = 0.0;
  double stderr_S = 0.0;
  double energy_term = 0.0;      // (beta J)^2 / 2 (1 - 1/p) q1^p
  double kl = 0.0;               // D_KL(P || Q) from the same samples
  bool low_precision = false;    // relative stderr above 20%
};

/// TAP complexity at m = 1 with z ~ N(0, J^2 q1^{p-1}) and xi covariance Sigma - J^2 q1^{p-1}.
TapResult tap_complexity(const ImaginaryTimeKernel& kernel, double q1, const TapConfig& config);

nlohmann::json to_json(const ImaginaryTimeKernel& k);
ImaginaryTimeKernel kernel_from_json(const nlohmann::json& j);

}  // namespace glasslab::replica
