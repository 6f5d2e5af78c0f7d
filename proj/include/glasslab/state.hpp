#pragma once

#include <array>
#include <vector>

#include <json.hpp>

#include "glasslab/common.hpp"
#include "glasslab/rng.hpp"

namespace glasslab {

/// Tolerances shared by every constructor of DensityState.
struct StateTolerance {
  double hermiticity = 1e-8;   // max |M - M^dagger| entry before rejection
  double trace = 1e-6;         // max |Tr M - 1| before rejection; smaller drift is renormalized
  double clamp = 1e-9;         // eigenvalues in [-reject, -clamp) are clamped to 0 and renormalized
  double reject = 1e-7;        // eigenvalues below -reject are an error
};

/// Dense n-qubit density matrix: Hermitian, unit trace, positive semidefinite.
/// Basis index bit r is qubit r.
class DensityState {
public:
  /// Validates and repairs `m` within `tol`; throws NumericalError otherwise.
  static DensityState from_matrix(int n, Matrix m, const StateTolerance& tol = {});
  /// Skips the spectral check. For matrices that are PSD by construction
  /// (spectral sums with nonnegative weights).
  static DensityState from_trusted(int n, Matrix m);

  static DensityState maximally_mixed(int n);
  static DensityState pure(int n, const Eigen::VectorXcd& psi);
  /// Computational basis state |b>, qubit r taking bit r of `bits`.
  static DensityState basis(int n, std::uint64_t bits);
  /// Tensor product of single-qubit states, qubits[r] on qubit r.
  static DensityState product(const std::vector<Matrix>& qubits);

  int n() const { return n_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }
  const Matrix& matrix() const { return matrix_; }

  /// Single-qubit marginal on `qubit`.
  Matrix marginal(int qubit) const;
  /// Bloch vector (<X>, <Y>, <Z>) of every qubit.
  std::vector<std::array<double, 3>> bloch_vectors() const;
  double purity() const;

private:
  DensityState(int n, Matrix m) : n_(n), matrix_(std::move(m)) {}
  int n_ = 0;
  Matrix matrix_;
};

double trace_norm(const Matrix& hermitian);
double trace_distance(const DensityState& a, const DensityState& b);
Matrix kron(const Matrix& a, const Matrix& b);

/// Random state G G^dagger / Tr from a Ginibre matrix with `rank` columns (full rank when rank <= 0).
DensityState random_density(int n, CounterRng& rng, int rank = 0);
/// Haar-random unitary of size dim (QR of a Ginibre matrix with phase fix).
Matrix random_unitary(int dim, CounterRng& rng);

/// Row-major complex matrix with an explicit n field:
/// {"n": n, "re": [[...]], "im": [[...]]}.
nlohmann::json to_json(const DensityState& s);
DensityState state_from_json(const nlohmann::json& j);

namespace paulis {
Matrix I2();
Matrix X();
Matrix Y();
Matrix Z();
/// sigma^- = |0><1| (lowers |1> to |0>).
Matrix lowering();
}  // namespace paulis

}  // namespace glasslab
