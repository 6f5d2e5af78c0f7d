#include "glasslab/transport.hpp"

#include <algorithm>
#include <cmath>

#include "glasslab/pauli.hpp"

namespace glasslab::transport {

namespace {

void check_pair(const DensityState& a, const DensityState& b) {
  require(a.n() == b.n(), "dimension mismatch: " + std::to_string(a.n()) + " vs " + std::to_string(b.n()) + " qubits");
}

double sq(double v) { return v * v; }

// All 4^n Pauli strings, identity first, with Pauli-coefficient transforms.
struct PauliBasis {
  int n;
  int dim;
  std::vector<pauli::PauliString> strings;

  explicit PauliBasis(int qubits) : n(qubits), dim(1 << qubits) {
    const std::uint64_t full = (std::uint64_t{1} << n) - 1;
    for (std::uint64_t x = 0; x <= full; ++x)
      for (std::uint64_t z = 0; z <= full; ++z) strings.push_back({x, z});
    std::stable_sort(strings.begin(), strings.end(),
                     [](const auto& a, const auto& b) { return a.is_identity() && !b.is_identity(); });
  }

  std::size_t size() const { return strings.size(); }

  std::vector<double> coeffs(const Matrix& a) const {
    std::vector<double> out(strings.size());
    for (std::size_t k = 0; k < strings.size(); ++k) out[k] = pauli::trace_product(strings[k], a).real() / dim;
    return out;
  }

  Matrix matrix(const std::vector<double>& c) const {
    Matrix m = Matrix::Zero(dim, dim);
    for (std::size_t k = 0; k < strings.size(); ++k)
      if (c[k] != 0.0) pauli::add_scaled(strings[k], c[k], m);
    return m;
  }

  bool touches(std::size_t k, int qubit) const { return (strings[k].support() >> qubit) & 1U; }
};

Matrix soft_threshold(const Matrix& a, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  if (eig.info() != Eigen::Success) throw NumericalError("eigensolver failed in W1 prox step");
  RealVector v = eig.eigenvalues();
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    const double mag = std::max(std::abs(v(k)) - t, 0.0);
    v(k) = std::copysign(mag, v(k));
  }
  return eig.eigenvectors() * v.cast<Complex>().asDiagonal() * eig.eigenvectors().adjoint();
}

double operator_norm_hermitian(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigensolver failed in operator norm");
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

double pauli_inner(const DensityState& rho, const DensityState& sigma) {
  check_pair(rho, sigma);
  const auto a = rho.bloch_vectors();
  const auto b = sigma.bloch_vectors();
  double acc = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r)
    for (int mu = 0; mu < 3; ++mu) acc += a[r][static_cast<std::size_t>(mu)] * b[r][static_cast<std::size_t>(mu)];
  return acc;
}

double pauli_sq_dist(const DensityState& rho, const DensityState& sigma) {
  const double d = pauli_inner(rho, rho) + pauli_inner(sigma, sigma) - 2.0 * pauli_inner(rho, sigma);
  if (d < -1e-10) throw NumericalError("negative Pauli distance " + std::to_string(d));
  return std::max(d, 0.0);
}

W1LowerParts w1_lower_parts(const DensityState& rho, const DensityState& sigma) {
  check_pair(rho, sigma);
  const auto a = rho.bloch_vectors();
  const auto b = sigma.bloch_vectors();
  double pauli_sq = 0.0;
  double marginal = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    double local = 0.0;
    for (std::size_t mu = 0; mu < 3; ++mu) local += sq(a[r][mu] - b[r][mu]);
    pauli_sq += local;
    // one-qubit trace norm equals the Bloch-vector distance
    marginal += 0.5 * std::sqrt(local);
  }
  return {0.25 * pauli_sq, marginal};
}

double w1_lower(const DensityState& rho, const DensityState& sigma) {
  const W1LowerParts parts = w1_lower_parts(rho, sigma);
  return std::max(parts.pauli_quarter, parts.marginal_trace);
}

double w1_upper(const DensityState& rho, const DensityState& sigma) {
  check_pair(rho, sigma);
  return 0.75 * rho.n() * trace_norm(rho.matrix() - sigma.matrix());
}

ExactW1Result w1_exact_small(const DensityState& rho, const DensityState& sigma, const ExactW1Options& options) {
  check_pair(rho, sigma);
  const int n = rho.n();
  require(n <= 3, "exact W1 is limited to n <= 3");

  const PauliBasis basis(n);
  const std::size_t np = basis.size();
  const std::vector<double> d = basis.coeffs(rho.matrix() - sigma.matrix());

  if (std::all_of(d.begin(), d.end(), [](double v) { return std::abs(v) < 1e-15; })) return {0.0, 0.0, 0.0, 0};

  std::vector<std::vector<int>> touching(np);
  for (std::size_t k = 1; k < np; ++k)
    for (int i = 0; i < n; ++i)
      if (basis.touches(k, i)) touching[k].push_back(i);

  const auto nz = static_cast<std::size_t>(n);
  const Matrix zero = Matrix::Zero(basis.dim, basis.dim);
  std::vector<Matrix> x(nz, zero), y(nz, zero), u(nz, zero), y_prev(nz, zero);
  double penalty = 1.0;
  double best_primal = std::numeric_limits<double>::infinity();
  double best_dual = 0.0;

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    // X-step: Hilbert-Schmidt projection onto {X_i in V_i, sum_i X_i = D}, done per Pauli coefficient.
    std::vector<std::vector<double>> w(nz);
    for (std::size_t i = 0; i < nz; ++i) w[i] = basis.coeffs(y[i] - u[i]);
    std::vector<std::vector<double>> xc(nz, std::vector<double>(np, 0.0));
    for (std::size_t k = 1; k < np; ++k) {
      double total = 0.0;
      for (int i : touching[k]) total += w[static_cast<std::size_t>(i)][k];
      const double shift = (d[k] - total) / static_cast<double>(touching[k].size());
      for (int i : touching[k]) xc[static_cast<std::size_t>(i)][k] = w[static_cast<std::size_t>(i)][k] + shift;
    }
    for (std::size_t i = 0; i < nz; ++i) x[i] = basis.matrix(xc[i]);

    // Y-step: prox of (1/2)||.||_1 is spectral soft thresholding.
    double primal_res = 0.0;
    double dual_res = 0.0;
    for (std::size_t i = 0; i < nz; ++i) {
      y_prev[i] = y[i];
      y[i] = soft_threshold(x[i] + u[i], 0.5 / penalty);
      u[i] += x[i] - y[i];
      primal_res += (x[i] - y[i]).squaredNorm();
      dual_res += (y[i] - y_prev[i]).squaredNorm();
    }
    primal_res = std::sqrt(primal_res);
    dual_res = penalty * std::sqrt(dual_res);

    if (iter % options.check_every == 0) {
      double primal = 0.0;
      for (const Matrix& xi : x) primal += 0.5 * trace_norm(xi);
      best_primal = std::min(best_primal, primal);

      // Dual certificate from the scaled multipliers: share the V_i components across qubits,
      // then rescale so every block has operator norm <= 1/2.
      std::vector<std::vector<double>> lam(nz);
      for (std::size_t i = 0; i < nz; ++i) {
        lam[i] = basis.coeffs(u[i]);
        for (double& v : lam[i]) v *= penalty;
        lam[i][0] = pauli::trace_product(basis.strings[0], u[i]).real() * penalty / basis.dim;
      }
      std::vector<double> h(np, 0.0);
      double value = 0.0;
      for (std::size_t k = 1; k < np; ++k) {
        for (int i : touching[k]) h[k] += lam[static_cast<std::size_t>(i)][k];
        h[k] /= static_cast<double>(touching[k].size());
        value += h[k] * d[k] * basis.dim;
      }
      double worst = 0.0;
      for (std::size_t i = 0; i < nz; ++i) {
        std::vector<double> li = lam[i];
        for (std::size_t k = 1; k < np; ++k)
          if (basis.touches(k, static_cast<int>(i))) li[k] = h[k];
        worst = std::max(worst, operator_norm_hermitian(basis.matrix(li)));
      }
      const double scale = worst > 0.5 ? 0.5 / worst : 1.0;
      best_dual = std::max(best_dual, value * scale);

      const double gap = best_primal - best_dual;
      if (gap <= options.gap_tolerance) return {best_primal, best_dual, std::max(gap, 0.0), iter};
    }

    // residual balancing
    if (iter % 5 == 0) {
      if (primal_res > 10.0 * dual_res) {
        penalty *= 2.0;
        for (Matrix& ui : u) ui /= 2.0;
      } else if (dual_res > 10.0 * primal_res) {
        penalty /= 2.0;
        for (Matrix& ui : u) ui *= 2.0;
      }
    }
  }
  throw NumericalError("exact W1 solver did not close the duality gap (primal " + std::to_string(best_primal) +
                       ", dual " + std::to_string(best_dual) + ")");
}

W1Bracket w1_bracket(const DensityState& rho, const DensityState& sigma, bool exact) {
  if (exact) {
    const ExactW1Result r = w1_exact_small(rho, sigma);
    return {r.dual_bound, r.value, "admm-dual", "admm-primal"};
  }
  const W1LowerParts parts = w1_lower_parts(rho, sigma);
  const bool pauli_side = parts.pauli_quarter >= parts.marginal_trace;
  return {std::max(parts.pauli_quarter, parts.marginal_trace), w1_upper(rho, sigma),
          pauli_side ? "pauli-seminorm" : "marginal-trace", "discard-qubits"};
}

Witness witness_observable(const DensityState& rho_i, const DensityState& rho_j) {
  check_pair(rho_i, rho_j);
  Witness out;
  out.gap = 0.0;
  for (int r = 0; r < rho_i.n(); ++r) {
    const Matrix diff = rho_i.marginal(r) - rho_j.marginal(r);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(diff);
    const RealVector vals = eig.eigenvalues();
    // traceless 2x2: eigenvalues -e <= +e
    const double e = 0.5 * (vals(1) - vals(0));
    if (e < 1e-14) {
      out.observables.push_back(Matrix::Zero(2, 2));
      continue;
    }
    const Eigen::VectorXcd v = eig.eigenvectors().col(1);
    const Eigen::VectorXcd w = eig.eigenvectors().col(0);
    Matrix xr = v * v.adjoint() - w * w.adjoint();
    out.gap += (xr * diff).trace().real();
    out.observables.push_back(std::move(xr));
  }
  return out;
}

double wc_lower(const Channel& channel, const std::vector<DensityState>& probes) {
  double best = 0.0;
  for (const DensityState& probe : probes) {
    const DensityState image = channel(probe);
    require(image.n() == probe.n(), "channel changed the qubit count");
    best = std::max(best, w1_lower(probe, image));
  }
  return best;
}

std::vector<DensityState> default_probes(int n, const std::optional<Matrix>& hamiltonian, int max_basis) {
  std::vector<DensityState> out;
  const std::uint64_t dim = std::uint64_t{1} << n;
  if (dim <= static_cast<std::uint64_t>(max_basis)) {
    for (std::uint64_t b = 0; b < dim; ++b) out.push_back(DensityState::basis(n, b));
  } else {
    out.push_back(DensityState::basis(n, 0));
    out.push_back(DensityState::basis(n, dim - 1));
  }
  Matrix plus(2, 2);
  plus.setConstant(0.5);
  out.push_back(DensityState::product(std::vector<Matrix>(static_cast<std::size_t>(n), plus)));
  out.push_back(DensityState::maximally_mixed(n));
  if (hamiltonian) {
    require(hamiltonian->rows() == static_cast<Eigen::Index>(dim), "probe Hamiltonian has wrong dimension");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(*hamiltonian);
    if (eig.info() != Eigen::Success) throw NumericalError("eigensolver failed on probe Hamiltonian");
    const Eigen::Index count = std::min<Eigen::Index>(eig.eigenvectors().cols(), max_basis);
    for (Eigen::Index k = 0; k < count; ++k) out.push_back(DensityState::pure(n, eig.eigenvectors().col(k)));
  }
  return out;
}

}  // namespace glasslab::transport
