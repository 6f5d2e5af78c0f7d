#include "glasslab/state.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace glasslab {

namespace paulis {
Matrix I2() { return Matrix::Identity(2, 2); }
Matrix X() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
Matrix Y() {
  Matrix m(2, 2);
  m << 0, Complex(0, -1), Complex(0, 1), 0;
  return m;
}
Matrix Z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
Matrix lowering() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}
}  // namespace paulis

namespace {

void check_shape(int n, const Matrix& m) {
  require(n >= 1 && n <= 20, "qubit count out of range: " + std::to_string(n));
  const Eigen::Index dim = Eigen::Index{1} << n;
  require(m.rows() == dim && m.cols() == dim,
          "matrix is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ", expected 2^" +
              std::to_string(n));
}

}  // namespace

DensityState DensityState::from_matrix(int n, Matrix m, const StateTolerance& tol) {
  check_shape(n, m);
  const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (asym > tol.hermiticity) throw NumericalError("state is not Hermitian (deviation " + std::to_string(asym) + ")");
  m = 0.5 * (m + m.adjoint()).eval();

  const double tr = m.trace().real();
  if (std::abs(tr - 1.0) > tol.trace) throw NumericalError("state trace is " + std::to_string(tr));

  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  if (eig.info() != Eigen::Success) throw NumericalError("eigensolver failed on state");
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < -tol.reject) throw NumericalError("state has eigenvalue " + std::to_string(min_eig));
  if (min_eig < -tol.clamp) {
    RealVector vals = eig.eigenvalues().cwiseMax(0.0);
    m = eig.eigenvectors() * vals.cast<Complex>().asDiagonal() * eig.eigenvectors().adjoint();
  }
  m /= m.trace().real();
  return DensityState(n, std::move(m));
}

DensityState DensityState::from_trusted(int n, Matrix m) {
  check_shape(n, m);
  m = 0.5 * (m + m.adjoint()).eval();
  m /= m.trace().real();
  return DensityState(n, std::move(m));
}

DensityState DensityState::maximally_mixed(int n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  return from_trusted(n, Matrix::Identity(dim, dim));
}

DensityState DensityState::pure(int n, const Eigen::VectorXcd& psi) {
  require(psi.size() == (Eigen::Index{1} << n), "state vector has wrong dimension");
  const double norm = psi.norm();
  require(norm > 0.0, "zero state vector");
  const Eigen::VectorXcd v = psi / norm;
  return from_trusted(n, v * v.adjoint());
}

DensityState DensityState::basis(int n, std::uint64_t bits) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  require(bits < static_cast<std::uint64_t>(dim), "basis index out of range");
  Matrix m = Matrix::Zero(dim, dim);
  m(static_cast<Eigen::Index>(bits), static_cast<Eigen::Index>(bits)) = 1.0;
  return DensityState(n, std::move(m));
}

DensityState DensityState::product(const std::vector<Matrix>& qubits) {
  require(!qubits.empty(), "empty product state");
  Matrix m = qubits.front();
  // qubit r is bit r, so later qubits are more significant tensor factors
  for (std::size_t r = 1; r < qubits.size(); ++r) m = kron(qubits[r], m);
  return from_matrix(static_cast<int>(qubits.size()), std::move(m));
}

Matrix DensityState::marginal(int qubit) const {
  require(qubit >= 0 && qubit < n_, "qubit index out of range");
  Matrix out = Matrix::Zero(2, 2);
  const Eigen::Index dim = matrix_.rows();
  const Eigen::Index bit = Eigen::Index{1} << qubit;
  for (Eigen::Index b = 0; b < dim; ++b) {
    if (b & bit) continue;
    const Eigen::Index b1 = b | bit;
    out(0, 0) += matrix_(b, b);
    out(0, 1) += matrix_(b, b1);
    out(1, 0) += matrix_(b1, b);
    out(1, 1) += matrix_(b1, b1);
  }
  return out;
}

std::vector<std::array<double, 3>> DensityState::bloch_vectors() const {
  std::vector<std::array<double, 3>> out(static_cast<std::size_t>(n_));
  for (int r = 0; r < n_; ++r) {
    const Matrix m = marginal(r);
    out[static_cast<std::size_t>(r)] = {2.0 * m(1, 0).real(), 2.0 * m(1, 0).imag(), (m(0, 0) - m(1, 1)).real()};
  }
  return out;
}

double DensityState::purity() const { return (matrix_ * matrix_).trace().real(); }

double trace_norm(const Matrix& hermitian) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(hermitian, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigensolver failed in trace norm");
  return eig.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const DensityState& a, const DensityState& b) {
  require(a.n() == b.n(), "dimension mismatch");
  return 0.5 * trace_norm(a.matrix() - b.matrix());
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

namespace {
Matrix ginibre(Eigen::Index rows, Eigen::Index cols, CounterRng& rng) {
  Matrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double re = rng.gaussian();
      g(i, j) = Complex(re, rng.gaussian());
    }
  return g;
}
}  // namespace

DensityState random_density(int n, CounterRng& rng, int rank) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  const Eigen::Index cols = rank <= 0 ? dim : std::min<Eigen::Index>(rank, dim);
  const Matrix g = ginibre(dim, cols, rng);
  return DensityState::from_trusted(n, g * g.adjoint());
}

Matrix random_unitary(int dim, CounterRng& rng) {
  const Matrix g = ginibre(dim, dim, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR();
  for (int k = 0; k < dim; ++k) {
    const Complex d = r(k, k);
    const double mag = std::abs(d);
    if (mag > 0.0) q.col(k) *= d / mag;
  }
  return q;
}

nlohmann::json to_json(const DensityState& s) {
  nlohmann::json re = nlohmann::json::array();
  nlohmann::json im = nlohmann::json::array();
  const Matrix& m = s.matrix();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json rr = nlohmann::json::array();
    nlohmann::json ri = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      rr.push_back(m(i, j).real());
      ri.push_back(m(i, j).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ri));
  }
  return {{"n", s.n()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

DensityState state_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("n") && j.contains("re"), "state JSON needs fields n and re");
  const int n = j.at("n").get<int>();
  require(n >= 1 && n <= 12, "state JSON qubit count out of range");
  const Eigen::Index dim = Eigen::Index{1} << n;
  const auto& re = j.at("re");
  require(re.is_array() && static_cast<Eigen::Index>(re.size()) == dim, "state JSON re has wrong row count");
  const bool has_im = j.contains("im");
  Matrix m(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    const auto& row = re.at(static_cast<std::size_t>(r));
    require(static_cast<Eigen::Index>(row.size()) == dim, "state JSON row has wrong length");
    for (Eigen::Index c = 0; c < dim; ++c) {
      const double imag = has_im ? j.at("im").at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>() : 0.0;
      m(r, c) = Complex(row.at(static_cast<std::size_t>(c)).get<double>(), imag);
    }
  }
  return DensityState::from_matrix(n, std::move(m));
}

}  // namespace glasslab
