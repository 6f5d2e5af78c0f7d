#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "glasslab/state.hpp"

using namespace glasslab;

TEST_CASE("constructors produce valid states") {
  const auto mixed = DensityState::maximally_mixed(2);
  CHECK(mixed.purity() == doctest::Approx(0.25));
  const auto b = DensityState::basis(3, 5);
  CHECK(b.matrix()(5, 5).real() == 1.0);
  const auto z = b.bloch_vectors();
  CHECK(z[0][2] == doctest::Approx(-1.0));
  CHECK(z[1][2] == doctest::Approx(1.0));
  CHECK(z[2][2] == doctest::Approx(-1.0));
}

TEST_CASE("product places qubit r on bit r") {
  Matrix zero = Matrix::Zero(2, 2), one = Matrix::Zero(2, 2);
  zero(0, 0) = 1.0;
  one(1, 1) = 1.0;
  const auto s = DensityState::product({one, zero});
  CHECK(s.matrix()(1, 1).real() == doctest::Approx(1.0));
}

TEST_CASE("validation thresholds") {
  Matrix m = Matrix::Identity(2, 2) * 0.5;
  m(0, 1) = 1e-6;
  CHECK_THROWS_AS(DensityState::from_matrix(1, m), NumericalError);
  Matrix t = Matrix::Identity(2, 2) * 0.6;
  CHECK_THROWS_AS(DensityState::from_matrix(1, t), NumericalError);
  Matrix neg = Matrix::Zero(2, 2);
  neg(0, 0) = 1.0 + 5e-8;
  neg(1, 1) = -5e-8;
  const auto fixed = DensityState::from_matrix(1, neg);
  CHECK(fixed.matrix()(1, 1).real() >= 0.0);
  CHECK(fixed.matrix().trace().real() == doctest::Approx(1.0));
  neg(0, 0) = 1.0 + 1e-6;
  neg(1, 1) = -1e-6;
  CHECK_THROWS_AS(DensityState::from_matrix(1, neg), NumericalError);
  CHECK_THROWS_AS(DensityState::from_matrix(2, Matrix::Identity(2, 2)), DomainError);
}

TEST_CASE("marginals and trace distance") {
  Eigen::VectorXcd bell = Eigen::VectorXcd::Zero(4);
  bell(0) = bell(3) = 1.0;
  const auto s = DensityState::pure(2, bell);
  CHECK((s.marginal(0) - 0.5 * Matrix::Identity(2, 2)).norm() < 1e-14);
  CHECK(trace_distance(DensityState::basis(1, 0), DensityState::basis(1, 1)) == doctest::Approx(1.0));
}

TEST_CASE("JSON round trip") {
  Eigen::VectorXcd psi(2);
  psi << Complex(0.6, 0.0), Complex(0.0, 0.8);
  const auto s = DensityState::pure(1, psi);
  const auto back = state_from_json(to_json(s));
  CHECK((back.matrix() - s.matrix()).norm() < 1e-15);
}
