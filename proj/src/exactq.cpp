#include "glasslab/exactq.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <set>

#include <boost/numeric/odeint.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "glasslab/transport.hpp"

namespace glasslab::exactq {

namespace {

constexpr double kTraceDrift = 1e-8;

std::uint64_t support_mask(const std::vector<int>& support) {
  std::uint64_t m = 0;
  for (int q : support) m |= std::uint64_t{1} << q;
  return m;
}

// Local index of `full` restricted to `support`, support[k] -> bit k.
Eigen::Index local_index(std::uint64_t full, const std::vector<int>& support) {
  Eigen::Index idx = 0;
  for (std::size_t k = 0; k < support.size(); ++k)
    if ((full >> support[k]) & 1U) idx |= Eigen::Index{1} << k;
  return idx;
}

void check_support(const std::vector<int>& support, int n, Eigen::Index dim, const std::string& what) {
  require(!support.empty(), what + ": empty support");
  std::set<int> seen;
  for (int q : support) {
    require(q >= 0 && q < n, what + ": qubit index out of range");
    require(seen.insert(q).second, what + ": repeated qubit in support");
  }
  require(dim == (Eigen::Index{1} << support.size()), what + ": operator size does not match its support");
}

DensityState finalize(int n, Matrix m) {
  const double tr = m.trace().real();
  if (!(std::abs(tr - 1.0) <= kTraceDrift))
    throw NumericalError("evolution drifted in trace by " + std::to_string(std::abs(tr - 1.0)));
  m = 0.5 * (m + m.adjoint().eval());
  return DensityState::from_matrix(n, std::move(m));
}

DensityState evolve_superoperator(const LindbladSpec& spec, double beta, const DensityState& rho0, double t) {
  const Matrix s = lindbladian_superoperator(spec, beta);
  const Matrix propagator = (t * s).exp();
  const auto dim = rho0.dim();
  const Eigen::VectorXcd v = Eigen::Map<const Eigen::VectorXcd>(rho0.matrix().data(), dim * dim);
  const Eigen::VectorXcd out = propagator * v;
  return finalize(spec.n, Eigen::Map<const Matrix>(out.data(), dim, dim));
}

DensityState evolve_ode(const LindbladSpec& spec, double beta, const DensityState& rho0, double t, double tol) {
  using State = std::vector<double>;
  const auto dim = rho0.dim();
  const Matrix h = spec.hamiltonian.size() == 0 ? Matrix::Zero(dim, dim) : spec.hamiltonian;
  std::vector<Matrix> ops;
  std::vector<double> rates;
  Matrix anti = Matrix::Zero(dim, dim);
  for (const Jump& j : spec.jumps) {
    ops.push_back(embed(j.op, j.support, spec.n));
    rates.push_back(j.rate(beta));
    anti += rates.back() * ops.back().adjoint() * ops.back();
  }
  // rho' = -i (K rho - rho K^dagger) + sum gamma A rho A^dagger with K = H - (i/2) sum gamma A^dagger A
  const Matrix k = h - Complex(0.0, 0.5) * anti;
  const auto entries = static_cast<std::size_t>(dim * dim);
  auto rhs = [&](const State& x, State& dx, double) {
    Eigen::Map<const Matrix> rho(reinterpret_cast<const Complex*>(x.data()), dim, dim);
    Matrix d = Complex(0.0, -1.0) * (k * rho - rho * k.adjoint());
    for (std::size_t i = 0; i < ops.size(); ++i) d += rates[i] * ops[i] * rho * ops[i].adjoint();
    std::copy_n(reinterpret_cast<const double*>(d.data()), 2 * entries, dx.begin());
  };
  State x(2 * entries);
  std::copy_n(reinterpret_cast<const double*>(rho0.matrix().data()), 2 * entries, x.begin());
  namespace odeint = boost::numeric::odeint;
  auto stepper = odeint::make_controlled(tol, tol, odeint::runge_kutta_dopri5<State>());
  odeint::integrate_adaptive(stepper, rhs, x, 0.0, t, std::min(0.01, t));
  for (double v : x)
    if (!std::isfinite(v)) throw NumericalError("Lindblad integration produced non-finite entries");
  return finalize(spec.n, Eigen::Map<const Matrix>(reinterpret_cast<const Complex*>(x.data()), dim, dim));
}

}  // namespace

GibbsResult gibbs_state(const Matrix& h, int n, double beta) {
  require(std::isfinite(beta), "beta must be finite");
  require(beta >= 0.0, "beta must be nonnegative");
  require(h.rows() == h.cols() && h.rows() == (Eigen::Index{1} << n), "Hamiltonian size does not match n");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  if (eig.info() != Eigen::Success) throw NumericalError("Hamiltonian eigendecomposition failed");
  const RealVector& e = eig.eigenvalues();
  const double e0 = e.minCoeff();
  RealVector w = (-beta * (e.array() - e0)).exp();
  const double sum = w.sum();
  w /= sum;
  const Matrix& u = eig.eigenvectors();
  Matrix rho = u * w.cast<Complex>().asDiagonal() * u.adjoint();
  GibbsResult r{DensityState::from_trusted(n, std::move(rho)), 0.0, 0.0};
  r.log_z = std::log(sum) - beta * e0;
  r.free_energy = beta > 0.0 ? -r.log_z / beta : -std::numeric_limits<double>::infinity();
  return r;
}

GibbsResult gibbs_state(const pauli::PauliHamiltonian& h, double beta, int dense_cap) {
  return gibbs_state(pauli::to_dense(h, dense_cap), h.n(), beta);
}

RateSchedule RateSchedule::constant(double rate, double beta_min, double beta_max) {
  RateSchedule s{Kind::Constant, rate, 0.0, beta_min, beta_max};
  s.validate();
  return s;
}

RateSchedule RateSchedule::linear(double offset, double slope, double beta_min, double beta_max) {
  RateSchedule s{Kind::Linear, offset, slope, beta_min, beta_max};
  s.validate();
  return s;
}

RateSchedule RateSchedule::metropolis(double prefactor, double gap, double beta_min, double beta_max) {
  RateSchedule s{Kind::Metropolis, prefactor, gap, beta_min, beta_max};
  s.validate();
  return s;
}

void RateSchedule::validate() const {
  require(std::isfinite(a) && std::isfinite(b), "rate parameters must be finite");
  require(std::isfinite(beta_min) && std::isfinite(beta_max) && beta_min <= beta_max, "rate domain must be an interval");
  switch (kind) {
    case Kind::Constant:
      require(a > 0.0, "constant rate must be positive");
      break;
    case Kind::Linear:
      require(a + b * beta_min > 0.0 && a + b * beta_max > 0.0, "linear rate must stay positive on its domain");
      break;
    case Kind::Metropolis:
      require(a > 0.0 && b >= 0.0, "metropolis rate needs a positive prefactor and a nonnegative gap");
      break;
  }
}

double RateSchedule::operator()(double beta) const {
  if (!contains(beta)) throw DomainError("beta " + std::to_string(beta) + " outside the rate schedule's domain");
  switch (kind) {
    case Kind::Constant:
      return a;
    case Kind::Linear:
      return a + b * beta;
    case Kind::Metropolis:
      return a * std::exp(-b * beta);
  }
  return a;
}

double RateSchedule::lipschitz() const {
  switch (kind) {
    case Kind::Constant:
      return 0.0;
    case Kind::Linear:
      return std::abs(b);
    case Kind::Metropolis:
      return a * b * std::exp(-b * beta_min);
  }
  return 0.0;
}

double Jump::op_norm() const {
  Eigen::JacobiSVD<Matrix> svd(op);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

Matrix embed(const Matrix& op, const std::vector<int>& support, int n) {
  check_support(support, n, op.rows(), "embed");
  require(op.rows() == op.cols(), "embedded operator must be square");
  const std::uint64_t mask = support_mask(support);
  const std::uint64_t dim = std::uint64_t{1} << n;
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::uint64_t r = 0; r < dim; ++r)
    for (std::uint64_t c = 0; c < dim; ++c)
      if ((r & ~mask) == (c & ~mask))
        out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = op(local_index(r, support), local_index(c, support));
  return out;
}

void LindbladSpec::validate() const {
  require(n >= 1, "Lindblad spec needs at least one qubit");
  const Eigen::Index dim = Eigen::Index{1} << n;
  if (hamiltonian.size() != 0) {
    require(hamiltonian.rows() == dim && hamiltonian.cols() == dim, "Hamiltonian part has the wrong size");
    require((hamiltonian - hamiltonian.adjoint()).cwiseAbs().maxCoeff() <= 1e-10, "Hamiltonian part must be Hermitian");
  }
  require(static_cast<double>(jumps.size()) <= max_jumps_per_qubit * n, "too many jump operators for n qubits");
  for (const Jump& j : jumps) {
    check_support(j.support, n, j.op.rows(), "jump operator");
    require(j.op.rows() == j.op.cols(), "jump operator must be square");
    require(j.op.allFinite(), "jump operator must be finite");
    j.rate.validate();
  }
}

double LindbladSpec::stability_rate() const {
  double total = 0.0;
  for (const Jump& j : jumps) {
    const double norm = j.op_norm();
    total += j.rate.lipschitz() * static_cast<double>(j.support.size()) * norm * norm;
  }
  return 1.5 * total;
}

Matrix lindbladian_superoperator(const LindbladSpec& spec, double beta) {
  spec.validate();
  const Eigen::Index dim = Eigen::Index{1} << spec.n;
  const Matrix id = Matrix::Identity(dim, dim);
  Matrix s = Matrix::Zero(dim * dim, dim * dim);
  // vec(A X B) = (B^T kron A) vec(X)
  if (spec.hamiltonian.size() != 0)
    s += Complex(0.0, -1.0) * (kron(id, spec.hamiltonian) - kron(spec.hamiltonian.transpose(), id));
  for (const Jump& j : spec.jumps) {
    const double gamma = j.rate(beta);
    const Matrix a = embed(j.op, j.support, spec.n);
    const Matrix ada = a.adjoint() * a;
    s += gamma * (kron(a.conjugate(), a) - 0.5 * kron(id, ada) - 0.5 * kron(ada.transpose(), id));
  }
  return s;
}

DensityState lindblad_evolve(const LindbladSpec& spec, double beta, const DensityState& rho0, double t,
                             const EvolveOptions& options) {
  require(std::isfinite(t) && t >= 0.0, "evolution time must be finite and nonnegative");
  require(rho0.n() == spec.n, "initial state and Lindblad spec disagree on n");
  if (spec.n > options.max_qubits) throw SizeError("Lindblad evolution is capped at " + std::to_string(options.max_qubits) + " qubits");
  spec.validate();
  for (const Jump& j : spec.jumps) (void)j.rate(beta);
  if (t == 0.0) return rho0;
  const double super_dim = std::pow(4.0, spec.n);
  Backend backend = options.backend;
  if (backend == Backend::Auto) backend = super_dim <= options.superoperator_cap ? Backend::Superoperator : Backend::Ode;
  if (backend == Backend::Superoperator) return evolve_superoperator(spec, beta, rho0, t);
  return evolve_ode(spec, beta, rho0, t, options.ode_tolerance);
}

int ShallowCircuitSpec::parameter_count() const {
  int count = 0;
  for (const ShallowLayer& layer : layers)
    for (const auto& sub : layer.sublayers) count += static_cast<int>(sub.size());
  return count;
}

void ShallowCircuitSpec::validate() const {
  require(n >= 1, "circuit needs at least one qubit");
  require(rho0.n() == n, "initial state has the wrong qubit count");
  require(depth >= 1 && locality >= 1 && degree >= 1, "declared depth, locality and degree must be positive");
  for (const ShallowLayer& layer : layers) {
    require(static_cast<int>(layer.sublayers.size()) <= depth, "layer deeper than the declared depth");
    std::vector<int> touches(static_cast<std::size_t>(n), 0);
    for (const auto& sub : layer.sublayers) {
      std::uint64_t used = 0;
      for (const Gate& g : sub) {
        check_support(g.qubits, n, g.generator.rows(), "gate");
        require(static_cast<int>(g.qubits.size()) <= locality, "gate acts on more qubits than the declared locality");
        require((g.generator - g.generator.adjoint()).cwiseAbs().maxCoeff() <= 1e-10, "gate generator must be Hermitian");
        const std::uint64_t m = support_mask(g.qubits);
        require((used & m) == 0, "gates within a sublayer must act on disjoint qubits");
        used |= m;
        for (int q : g.qubits) ++touches[static_cast<std::size_t>(q)];
      }
    }
    require(*std::max_element(touches.begin(), touches.end()) <= degree, "gate hypergraph exceeds the declared degree");
    const LindbladSpec& l = layer.lindblad;
    require(l.n == n, "Lindblad segment has the wrong qubit count");
    require(l.hamiltonian.size() == 0 || l.hamiltonian.cwiseAbs().maxCoeff() == 0.0,
            "Lindblad segments of a shallow circuit carry no Hamiltonian part");
    l.validate();
    for (std::size_t i = 0; i < l.jumps.size(); ++i) {
      require(l.jumps[i].support.size() == 1, "shallow-circuit jumps must be 1-local");
      require(l.jumps[i].op_norm() <= 1.0 + 1e-12, "shallow-circuit jumps must have operator norm at most 1");
      for (std::size_t k = 0; k < i; ++k) {
        if (l.jumps[k].support != l.jumps[i].support) continue;
        const Matrix& a = l.jumps[i].op;
        const Matrix& b = l.jumps[k].op;
        require((a * b - b * a).cwiseAbs().maxCoeff() <= 1e-12 &&
                    (a * b.adjoint() - b.adjoint() * a).cwiseAbs().maxCoeff() <= 1e-12,
                "shallow-circuit jumps must commute");
      }
    }
  }
}

double ShallowCircuitSpec::lambda() const {
  double best = 0.0;
  for (const ShallowLayer& layer : layers) {
    double sum = 0.0;
    for (const Jump& j : layer.lindblad.jumps) sum += j.rate.lipschitz();
    best = std::max(best, sum);
  }
  return best;
}

double ShallowCircuitSpec::stability_constant() const {
  const double p = static_cast<double>(layers.size());
  return std::pow(6.0, p) * std::pow(static_cast<double>(locality * degree), depth * p) * lambda();
}

Matrix gate_unitary(const Gate& g, double theta, int n) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g.generator);
  const Eigen::VectorXcd phases = (Complex(0.0, -theta) * eig.eigenvalues().cast<Complex>()).array().exp();
  const Matrix local = eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
  return embed(local, g.qubits, n);
}

Matrix layer_unitary(const ShallowLayer& layer, const std::vector<double>& theta, std::size_t& offset, int n) {
  const Eigen::Index dim = Eigen::Index{1} << n;
  Matrix u = Matrix::Identity(dim, dim);
  for (const auto& sub : layer.sublayers)
    for (const Gate& g : sub) {
      require(offset < theta.size(), "parameter vector is shorter than the gate list");
      u = gate_unitary(g, theta[offset++], n) * u;
    }
  return u;
}

DensityState shallow_evolve(const ShallowCircuitSpec& spec, double beta, const std::vector<double>& theta,
                            const EvolveOptions& options) {
  spec.validate();
  require(static_cast<int>(theta.size()) == spec.parameter_count(), "parameter vector length does not match the gate list");
  DensityState rho = spec.rho0;
  std::size_t offset = 0;
  for (const ShallowLayer& layer : spec.layers) {
    if (!layer.lindblad.jumps.empty()) rho = lindblad_evolve(layer.lindblad, beta, rho, 1.0, options);
    const Matrix u = layer_unitary(layer, theta, offset, spec.n);
    Matrix m = u * rho.matrix() * u.adjoint();
    rho = DensityState::from_trusted(spec.n, 0.5 * (m + m.adjoint().eval()));
  }
  return rho;
}

int light_cone_size(const ShallowLayer& layer, int n, int qubit) {
  require(qubit >= 0 && qubit < n, "qubit index out of range");
  std::uint64_t cone = std::uint64_t{1} << qubit;
  for (const auto& sub : layer.sublayers)
    for (const Gate& g : sub) {
      const std::uint64_t m = support_mask(g.qubits);
      if (cone & m) cone |= m;
    }
  return std::popcount(cone);
}

double light_cone_norm_bound(const ShallowLayer& layer, int n) {
  int best = 0;
  for (int q = 0; q < n; ++q) best = std::max(best, light_cone_size(layer, n, q));
  return 1.5 * best;
}

bool StabilityReport::all_pass() const {
  return std::all_of(pairs.begin(), pairs.end(), [](const StabilityPair& p) { return p.pass; });
}

namespace {

template <typename Run>
StabilityReport stability_pairs(const std::string& name, double lipschitz, const std::vector<double>& betas,
                                double max_separation, Run run) {
  require(!betas.empty(), "stability experiment needs at least one beta");
  StabilityReport report;
  report.algorithm = name;
  report.lipschitz = lipschitz;
  std::vector<DensityState> outputs;
  outputs.reserve(betas.size());
  for (double b : betas) outputs.push_back(run(b));
  for (std::size_t i = 0; i < betas.size(); ++i)
    for (std::size_t j = i + 1; j < betas.size(); ++j) {
      const double gap = std::abs(betas[i] - betas[j]);
      if (gap > max_separation) continue;
      StabilityPair p{betas[i], betas[j], transport::w1_lower(outputs[i], outputs[j]), lipschitz * gap, false};
      p.pass = p.measured <= p.budget * (1.0 + 1e-6) + 1e-12;
      report.pairs.push_back(p);
    }
  return report;
}

void check_domain(const LindbladSpec& spec, const std::vector<double>& betas) {
  for (double b : betas)
    for (const Jump& j : spec.jumps)
      if (!j.rate.contains(b)) throw DomainError("beta " + std::to_string(b) + " outside a rate schedule's domain");
}

}  // namespace

StabilityReport lindblad_stability(const LindbladSpec& spec, const DensityState& rho0, double t,
                                   const std::vector<double>& betas, double max_separation,
                                   const EvolveOptions& options) {
  spec.validate();
  check_domain(spec, betas);
  return stability_pairs("lindblad", t * spec.stability_rate(), betas, max_separation,
                         [&](double b) { return lindblad_evolve(spec, b, rho0, t, options); });
}

StabilityReport shallow_stability(const ShallowCircuitSpec& spec, const std::vector<double>& theta,
                                  const std::vector<double>& betas, double max_separation,
                                  const EvolveOptions& options) {
  spec.validate();
  for (const ShallowLayer& layer : spec.layers) check_domain(layer.lindblad, betas);
  return stability_pairs("shallow", spec.stability_constant(), betas, max_separation,
                         [&](double b) { return shallow_evolve(spec, b, theta, options); });
}

nlohmann::json to_json(const StabilityReport& r) {
  nlohmann::json pairs = nlohmann::json::array();
  for (const StabilityPair& p : r.pairs)
    pairs.push_back({{"beta", p.beta}, {"beta_prime", p.beta_prime}, {"measured", p.measured},
                     {"budget", p.budget}, {"pass", p.pass}});
  return {{"schema", "glasslab.stability_report"}, {"version", 1}, {"algorithm", r.algorithm},
          {"lipschitz", r.lipschitz}, {"all_pass", r.all_pass()}, {"pairs", pairs}};
}

namespace {

RateSchedule random_schedule(CounterRng& rng, double beta_max) {
  const double u = rng.uniform();
  if (u < 1.0 / 3.0) return RateSchedule::constant(0.1 + rng.uniform(), 0.0, beta_max);
  if (u < 2.0 / 3.0) return RateSchedule::linear(0.1 + rng.uniform(), 0.5 * rng.uniform(), 0.0, beta_max);
  return RateSchedule::metropolis(0.2 + rng.uniform(), rng.uniform(), 0.0, beta_max);
}

Matrix random_hermitian(int dim, CounterRng& rng) {
  Matrix g(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) g(i, j) = Complex(rng.gaussian(), rng.gaussian());
  return 0.5 * (g + g.adjoint());
}

}  // namespace

LindbladSpec random_lindblad(int n, CounterRng& rng, double beta_max) {
  require(n >= 1, "random Lindblad spec needs at least one qubit");
  LindbladSpec spec;
  spec.n = n;
  const std::uint64_t seed = rng.next_u64();
  spec.hamiltonian = n >= 2 ? pauli::to_dense(pauli::sample_ensemble(n, 2, 1.0, seed))
                            : pauli::to_dense(pauli::sample_ensemble(1, 1, 1.0, seed));
  for (int i = 0; i < n; ++i) {
    Jump j;
    const double u = rng.uniform();
    const int q = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n));
    if (u < 0.3 || n == 1) {
      j.op = u < 0.15 ? paulis::lowering() : Matrix(paulis::lowering().adjoint());
      j.support = {q};
    } else if (u < 0.5) {
      j.op = paulis::Z();
      j.support = {q};
    } else {
      const int r = (q + 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n - 1))) % n;
      Matrix g(4, 4);
      for (int c = 0; c < 4; ++c)
        for (int k = 0; k < 4; ++k) g(k, c) = Complex(rng.gaussian(), rng.gaussian());
      j.op = g / Eigen::JacobiSVD<Matrix>(g).singularValues()(0);
      j.support = {q, r};
    }
    j.rate = random_schedule(rng, beta_max);
    spec.jumps.push_back(std::move(j));
  }
  spec.validate();
  return spec;
}

ShallowCircuitSpec random_shallow(int n, int layers, CounterRng& rng, double beta_max) {
  require(n >= 2, "brickwork circuits need at least two qubits");
  require(layers >= 1, "circuit needs at least one layer");
  ShallowCircuitSpec spec;
  spec.n = n;
  spec.rho0 = DensityState::basis(n, 0);
  spec.depth = 2;
  spec.locality = 2;
  spec.degree = 2;
  for (int l = 0; l < layers; ++l) {
    ShallowLayer layer;
    for (int parity = 0; parity < 2; ++parity) {
      std::vector<Gate> sub;
      for (int q = parity; q + 1 < n; q += 2) sub.push_back(Gate{{q, q + 1}, random_hermitian(4, rng)});
      layer.sublayers.push_back(std::move(sub));
    }
    layer.lindblad.n = n;
    for (int q = 0; q < n; ++q) {
      Jump j;
      j.op = rng.uniform() < 0.5 ? paulis::lowering() : paulis::Z();
      j.support = {q};
      j.rate = random_schedule(rng, beta_max);
      layer.lindblad.jumps.push_back(std::move(j));
    }
    spec.layers.push_back(std::move(layer));
  }
  spec.validate();
  return spec;
}

}  // namespace glasslab::exactq
