#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "glasslab/pauli.hpp"
#include "glasslab/state.hpp"

using namespace glasslab;
using namespace glasslab::pauli;

namespace {

Matrix letter_matrix(char c) {
  switch (c) {
    case 'X': return paulis::X();
    case 'Y': return paulis::Y();
    case 'Z': return paulis::Z();
    default: return paulis::I2();
  }
}

// Independent builder: explicit Kronecker products, qubit n-1 leftmost.
Matrix naive_dense(PauliString s, int n) {
  Matrix m = letter_matrix(s.letter(0));
  for (int r = 1; r < n; ++r) m = kron(letter_matrix(s.letter(r)), m);
  return m;
}

std::vector<PauliString> all_strings(int n) {
  std::vector<PauliString> out;
  const std::uint64_t full = (std::uint64_t{1} << n) - 1;
  for (std::uint64_t x = 0; x <= full; ++x)
    for (std::uint64_t z = 0; z <= full; ++z) out.push_back({x, z});
  return out;
}

}  // namespace

TEST_CASE("ensemble term counts") {
  CHECK(sample_ensemble(5, 3, 1.0, 7).terms().size() == 270);
  const auto h = sample_ensemble(1, 1, 1.0, 3);
  REQUIRE(h.terms().size() == 3);
  CHECK(h.terms()[0].string == PauliString::parse("X"));
  CHECK(h.terms()[1].string == PauliString::parse("Y"));
  CHECK(h.terms()[2].string == PauliString::parse("Z"));
  for (const auto& t : sample_ensemble(6, 2, 1.0, 1).terms()) CHECK(t.string.weight() == 2);
}

TEST_CASE("ensemble rejects bad locality") {
  CHECK_THROWS_AS(sample_ensemble(3, 4, 1.0, 0), DomainError);
  CHECK_THROWS_AS(sample_ensemble(3, 0, 1.0, 0), DomainError);
  CHECK_THROWS_AS(sample_ensemble(3, 2, -1.0, 0), DomainError);
  // large n samples fine, only realization is capped
  const auto big = sample_ensemble(13, 1, 1.0, 0);
  CHECK_THROWS_AS(to_dense(big), SizeError);
}

TEST_CASE("ensemble variance") {
  CHECK(ensemble_variance(5, 3, 1.0) == doctest::Approx(0.08));
  double sum = 0.0, sumsq = 0.0;
  long count = 0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    for (const auto& t : sample_ensemble(5, 3, 1.0, seed).terms()) {
      sum += t.coeff;
      sumsq += t.coeff * t.coeff;
      ++count;
    }
  }
  const double mean = sum / count;
  const double var = sumsq / count - mean * mean;
  const double se_var = 0.08 * std::sqrt(2.0 / count);
  CHECK(std::abs(mean) < 3.0 * std::sqrt(0.08 / count));
  CHECK(std::abs(var - 0.08) < 3.0 * se_var);
}

TEST_CASE("sampling is deterministic per seed") {
  const auto a = sample_ensemble(4, 2, 1.3, 11);
  const auto b = sample_ensemble(4, 2, 1.3, 11);
  const auto c = sample_ensemble(4, 2, 1.3, 12);
  bool differs = false;
  for (std::size_t k = 0; k < a.terms().size(); ++k) {
    CHECK(a.terms()[k].coeff == b.terms()[k].coeff);
    differs |= a.terms()[k].coeff != c.terms()[k].coeff;
  }
  CHECK(differs);
}

TEST_CASE("dense realization matches the naive builder") {
  CHECK(to_dense(PauliString::parse("Z"), 1).isApprox(paulis::Z()));
  for (int n = 1; n <= 3; ++n)
    for (const auto& s : all_strings(n)) CHECK((to_dense(s, n) - naive_dense(s, n)).norm() < 1e-14);

  const auto h = sample_ensemble(3, 2, 1.0, 5);
  Matrix expected = Matrix::Zero(8, 8);
  for (const auto& t : h.terms()) expected += t.coeff * naive_dense(t.string, 3);
  CHECK((to_dense(h) - expected).norm() < 1e-12);
  CHECK((to_dense(-h) + to_dense(h)).norm() < 1e-14);
}

TEST_CASE("dense strings are Hermitian, unitary and traceless") {
  for (const auto& s : all_strings(2)) {
    const Matrix m = to_dense(s, 2);
    CHECK((m - m.adjoint()).norm() < 1e-14);
    CHECK((m * m.adjoint() - Matrix::Identity(4, 4)).norm() < 1e-14);
    if (!s.is_identity()) CHECK(std::abs(m.trace()) < 1e-14);
  }
}

TEST_CASE("product phases agree with dense multiplication") {
  const Complex ipow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  for (int n = 1; n <= 3; ++n) {
    const auto strings = all_strings(n);
    for (const auto& a : strings) {
      for (const auto& b : strings) {
        const auto prod = multiply(a, b);
        const Matrix lhs = naive_dense(a, n) * naive_dense(b, n);
        CHECK((lhs - ipow[prod.phase] * naive_dense(prod.product, n)).norm() < 1e-13);
        const bool dense_commute = (lhs - naive_dense(b, n) * naive_dense(a, n)).norm() < 1e-13;
        CHECK(dense_commute == commutes(a, b));
      }
    }
  }
}

TEST_CASE("dense realization is linear") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto h1 = sample_ensemble(4, 2, 1.0, seed);
    const auto h2 = sample_ensemble(4, 2, 0.5, seed + 100);
    CHECK((to_dense(h1 + h2) - to_dense(h1) - to_dense(h2)).norm() < 1e-12);
  }
}

TEST_CASE("Pauli expectations") {
  CHECK(pauli_expectation(PauliString::parse("Z"), DensityState::basis(1, 0)) == doctest::Approx(1.0));
  CHECK(pauli_expectation(PauliString::parse("X"), DensityState::maximally_mixed(1)) == doctest::Approx(0.0));
  Eigen::VectorXcd bell = Eigen::VectorXcd::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  CHECK(pauli_expectation(PauliString::parse("YY"), DensityState::pure(2, bell)) == doctest::Approx(-1.0));
  Matrix bad = Matrix::Zero(2, 2);
  bad(0, 1) = Complex(0.0, 1.0);
  CHECK_THROWS_AS(pauli_expectation(PauliString::parse("X"), bad), NumericalError);
}

TEST_CASE("Hamiltonian validation and JSON round trip") {
  CHECK_THROWS_AS(PauliHamiltonian(2, {{1.0, PauliString::parse("XI")}, {2.0, PauliString::parse("XI")}}), DomainError);
  CHECK_THROWS_AS(PauliHamiltonian(1, {{1.0, PauliString::parse("IX")}}), DomainError);
  const auto h = sample_ensemble(4, 3, 1.0, 9);
  const auto back = hamiltonian_from_json(to_json(h));
  REQUIRE(back.terms().size() == h.terms().size());
  for (std::size_t k = 0; k < h.terms().size(); ++k) {
    CHECK(back.terms()[k].coeff == h.terms()[k].coeff);
    CHECK(back.terms()[k].string == h.terms()[k].string);
  }
  REQUIRE(back.ensemble());
  CHECK(back.ensemble()->p == 3);
}
