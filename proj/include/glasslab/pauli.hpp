#pragma once

#include <bit>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "glasslab/common.hpp"

namespace glasslab {
class DensityState;
}

namespace glasslab::pauli {

inline constexpr int kMaxQubits = 64;
inline constexpr int kDefaultDenseCap = 12;

/// Pauli string in symplectic form. Qubit r carries X (x only), Z (z only) or Y (both).
/// Phase convention: the single-qubit operator for bits (x, z) is i^{xz} X^x Z^z, so Y = iXZ.
struct PauliString {
  std::uint64_t x_mask = 0;
  std::uint64_t z_mask = 0;

  static PauliString single(int qubit, char letter);
  /// Parse "XIZY"-style text; character k acts on qubit k.
  static PauliString parse(const std::string& text);

  int weight() const { return std::popcount(x_mask | z_mask); }
  bool is_identity() const { return (x_mask | z_mask) == 0; }
  char letter(int qubit) const;
  std::uint64_t support() const { return x_mask | z_mask; }
  std::string to_string(int n) const;

  friend bool operator==(const PauliString&, const PauliString&) = default;
  friend auto operator<=>(const PauliString&, const PauliString&) = default;
};

/// True when the two strings commute (even symplectic product).
inline bool commutes(PauliString a, PauliString b) {
  return (std::popcount(a.x_mask & b.z_mask) + std::popcount(a.z_mask & b.x_mask)) % 2 == 0;
}

/// a * b = i^{phase} * product, with phase in {0,1,2,3}.
struct PauliProduct {
  int phase;
  PauliString product;
};
PauliProduct multiply(PauliString a, PauliString b);

struct Term {
  double coeff;
  PauliString string;
};

struct EnsembleInfo {
  int p;
  double J;
  std::uint64_t seed;
};

class PauliHamiltonian {
public:
  PauliHamiltonian() = default;
  /// Rejects duplicate strings and strings acting outside n qubits.
  PauliHamiltonian(int n, std::vector<Term> terms, std::optional<EnsembleInfo> ensemble = std::nullopt);

  int n() const { return n_; }
  const std::vector<Term>& terms() const { return terms_; }
  const std::optional<EnsembleInfo>& ensemble() const { return ensemble_; }

  PauliHamiltonian operator-() const;
  /// Sum with merged coefficients for shared strings; drops ensemble metadata.
  PauliHamiltonian operator+(const PauliHamiltonian& other) const;

private:
  int n_ = 0;
  std::vector<Term> terms_;
  std::optional<EnsembleInfo> ensemble_;
};

/// Per-term variance J^2 (p-1)! / n^{p-1} of the random p-local ensemble.
double ensemble_variance(int n, int p, double J);

/// All weight-p strings on n qubits, supports in lexicographic order, letters X<Y<Z
/// with the lowest support qubit most significant.
std::vector<PauliString> enumerate_weight(int n, int p);

/// Random p-local Hamiltonian: one i.i.d. Gaussian coefficient per weight-p string.
PauliHamiltonian sample_ensemble(int n, int p, double J, std::uint64_t seed);

/// Dense matrix of a single string; qubit 0 is the least significant bit of the basis index.
Matrix to_dense(PauliString s, int n, int dense_cap = kDefaultDenseCap);
Matrix to_dense(const PauliHamiltonian& h, int dense_cap = kDefaultDenseCap);

/// m += coeff * P (dense, in place).
void add_scaled(PauliString s, Complex coeff, Matrix& m);
/// Tr[P A] for any square A of matching size, no reality check.
Complex trace_product(PauliString s, const Matrix& a);

/// Tr[P rho], with the imaginary part checked (> 1e-8 throws NumericalError).
double pauli_expectation(PauliString s, const DensityState& rho);
double pauli_expectation(PauliString s, const Matrix& rho);

nlohmann::json to_json(const PauliHamiltonian& h);
PauliHamiltonian hamiltonian_from_json(const nlohmann::json& j);

}  // namespace glasslab::pauli
