#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "glasslab/exactq.hpp"
#include "glasslab/transport.hpp"

using namespace glasslab;
using namespace glasslab::exactq;

namespace {

LindbladSpec damping_spec(RateSchedule rate) {
  LindbladSpec spec;
  spec.n = 1;
  spec.jumps.push_back(Jump{paulis::lowering(), {0}, rate});
  return spec;
}

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m);
  return eig.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("gibbs state at beta zero is maximally mixed") {
  const auto h = pauli::sample_ensemble(3, 2, 1.0, 4);
  const auto g = gibbs_state(h, 0.0);
  CHECK((g.state.matrix() - DensityState::maximally_mixed(3).matrix()).norm() < 1e-12);
  CHECK(g.log_z == doctest::Approx(std::log(8.0)));
}

TEST_CASE("gibbs state of a single Z") {
  const pauli::PauliHamiltonian h(1, {{1.0, pauli::PauliString::single(0, 'Z')}});
  const auto g = gibbs_state(h, 1.0);
  const double zsum = std::exp(-1.0) + std::exp(1.0);
  CHECK(g.state.matrix()(0, 0).real() == doctest::Approx(std::exp(-1.0) / zsum).epsilon(1e-12));
  CHECK(g.state.matrix()(1, 1).real() == doctest::Approx(std::exp(1.0) / zsum).epsilon(1e-12));
  CHECK(g.log_z == doctest::Approx(std::log(zsum)));
  CHECK(g.free_energy == doctest::Approx(-std::log(zsum)));
}

TEST_CASE("gibbs purity grows with beta and the state commutes with H") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto h = pauli::sample_ensemble(3, 2, 1.0, seed);
    const Matrix hd = pauli::to_dense(h);
    double last = 0.0;
    for (double beta = 0.0; beta <= 5.0; beta += 0.25) {
      const auto g = gibbs_state(h, beta);
      CHECK(g.state.purity() >= last - 1e-12);
      last = g.state.purity();
      CHECK((g.state.matrix() * hd - hd * g.state.matrix()).norm() < 1e-8);
    }
  }
}

TEST_CASE("gibbs state domain errors") {
  const auto h = pauli::sample_ensemble(2, 2, 1.0, 1);
  CHECK_THROWS_AS(gibbs_state(h, std::nan("")), DomainError);
  CHECK_THROWS_AS(gibbs_state(h, INFINITY), DomainError);
  CHECK_THROWS_AS(gibbs_state(h, -1.0), DomainError);
}

TEST_CASE("rate schedules") {
  const auto c = RateSchedule::constant(0.7, 0.0, 5.0);
  CHECK(c(2.0) == 0.7);
  CHECK(c.lipschitz() == 0.0);
  const auto l = RateSchedule::linear(0.5, 0.25, 0.0, 4.0);
  CHECK(l(2.0) == doctest::Approx(1.0));
  CHECK(l.lipschitz() == doctest::Approx(0.25));
  const auto m = RateSchedule::metropolis(2.0, 0.5, 1.0, 3.0);
  CHECK(m(2.0) == doctest::Approx(2.0 * std::exp(-1.0)));
  CHECK(m.lipschitz() == doctest::Approx(1.0 * std::exp(-0.5)));
  // numerical slope never exceeds the declared constant
  for (double b = 1.0; b < 2.985; b += 0.01) CHECK(std::abs(m(b + 0.01) - m(b)) / 0.01 <= m.lipschitz() + 1e-12);
  CHECK_THROWS_AS(m(0.5), DomainError);
  CHECK_THROWS_AS(RateSchedule::linear(0.1, -1.0, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(RateSchedule::constant(0.0), DomainError);
}

TEST_CASE("embedding follows the support order") {
  // sigma^- on qubit 1 of 2 maps |10> (index 2) to |00>
  const Matrix a = embed(paulis::lowering(), {1}, 2);
  CHECK(std::abs(a(0, 2) - 1.0) < 1e-15);
  CHECK(std::abs(a(1, 3) - 1.0) < 1e-15);
  CHECK(a.cwiseAbs().sum() == doctest::Approx(2.0));
  const Matrix zx = embed(kron(paulis::X(), paulis::Z()), {2, 0}, 3);
  const Matrix expected = pauli::to_dense(pauli::PauliString::parse("XIZ"), 3);
  CHECK((zx - expected).norm() < 1e-14);
}

TEST_CASE("lindblad evolution at t = 0 is the identity") {
  CounterRng rng = CounterRng::from_seed(9);
  const auto spec = random_lindblad(2, rng);
  const auto rho = random_density(2, rng);
  CHECK((lindblad_evolve(spec, 1.0, rho, 0.0).matrix() - rho.matrix()).norm() == 0.0);
}

TEST_CASE("amplitude damping population decays as exp(-t)") {
  const auto spec = damping_spec(RateSchedule::constant(1.0));
  const auto one = DensityState::basis(1, 1);
  for (double t : {0.1, 0.5, 1.0, 2.0, 3.0}) {
    for (Backend b : {Backend::Superoperator, Backend::Ode}) {
      EvolveOptions o;
      o.backend = b;
      const auto out = lindblad_evolve(spec, 1.0, one, t, o);
      CHECK(out.matrix()(1, 1).real() == doctest::Approx(std::exp(-t)).epsilon(1e-8));
    }
  }
}

TEST_CASE("superoperator and ODE backends agree") {
  CounterRng rng = CounterRng::from_seed(21);
  for (int n = 1; n <= 4; ++n) {
    for (int rep = 0; rep < 3; ++rep) {
      const auto spec = random_lindblad(n, rng);
      const auto rho = random_density(n, rng);
      EvolveOptions exact, ode;
      exact.backend = Backend::Superoperator;
      ode.backend = Backend::Ode;
      const auto a = lindblad_evolve(spec, 2.0, rho, 1.0, exact);
      const auto b = lindblad_evolve(spec, 2.0, rho, 1.0, ode);
      CHECK(trace_distance(a, b) < 1e-6);
    }
  }
}

TEST_CASE("lindblad evolution preserves trace and positivity on random instances") {
  CounterRng rng = CounterRng::from_seed(33);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 1 + i % 4;
    const auto spec = random_lindblad(n, rng);
    const auto rho = random_density(n, rng, 1 + static_cast<int>(rng.next_u64() % 3));
    const double t = 2.0 * rng.uniform();
    const double beta = 10.0 * rng.uniform();
    const auto out = lindblad_evolve(spec, beta, rho, t);
    CHECK(std::abs(out.matrix().trace().real() - 1.0) < 1e-8);
    CHECK(min_eigenvalue(out.matrix()) >= -1e-7);
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("semigroup property") {
  CounterRng rng = CounterRng::from_seed(5);
  for (int n = 1; n <= 3; ++n) {
    const auto spec = random_lindblad(n, rng);
    const auto rho = random_density(n, rng);
    const auto whole = lindblad_evolve(spec, 1.5, rho, 1.3);
    const auto split = lindblad_evolve(spec, 1.5, lindblad_evolve(spec, 1.5, rho, 0.5), 0.8);
    CHECK(trace_distance(whole, split) < 1e-6);
  }
}

TEST_CASE("lindblad evolution size and domain errors") {
  LindbladSpec spec;
  spec.n = 7;
  CHECK_THROWS_AS(lindblad_evolve(spec, 1.0, DensityState::maximally_mixed(7), 1.0), SizeError);
  const auto damp = damping_spec(RateSchedule::constant(1.0, 0.0, 2.0));
  CHECK_THROWS_AS(lindblad_evolve(damp, 3.0, DensityState::basis(1, 1), 1.0), DomainError);
  CHECK_THROWS_AS(lindblad_evolve(damp, 1.0, DensityState::basis(1, 1), -1.0), DomainError);
  LindbladSpec crowded;
  crowded.n = 1;
  crowded.max_jumps_per_qubit = 1.0;
  crowded.jumps = {Jump{paulis::Z(), {0}, RateSchedule::constant(1.0)}, Jump{paulis::X(), {0}, RateSchedule::constant(1.0)}};
  CHECK_THROWS_AS(crowded.validate(), DomainError);
}

TEST_CASE("shallow circuit with identity gates and no jumps returns rho0") {
  CounterRng rng = CounterRng::from_seed(2);
  auto spec = random_shallow(3, 2, rng);
  for (auto& layer : spec.layers) layer.lindblad.jumps.clear();
  spec.rho0 = random_density(3, rng);
  const std::vector<double> zeros(static_cast<std::size_t>(spec.parameter_count()), 0.0);
  CHECK(trace_distance(shallow_evolve(spec, 1.0, zeros), spec.rho0) < 1e-12);
}

TEST_CASE("single unitary layer equals direct conjugation") {
  CounterRng rng = CounterRng::from_seed(3);
  auto spec = random_shallow(3, 1, rng);
  spec.layers[0].lindblad.jumps.clear();
  spec.rho0 = random_density(3, rng);
  std::vector<double> theta;
  for (int i = 0; i < spec.parameter_count(); ++i) theta.push_back(rng.uniform() * 3.0);
  std::size_t offset = 0;
  const Matrix u = layer_unitary(spec.layers[0], theta, offset, 3);
  CHECK((u * u.adjoint() - Matrix::Identity(8, 8)).norm() < 1e-12);
  const Matrix direct = u * spec.rho0.matrix() * u.adjoint();
  CHECK(trace_norm(shallow_evolve(spec, 1.0, theta).matrix() - direct) < 1e-10);
}

TEST_CASE("beta-independent schedules give identical outputs") {
  CounterRng rng = CounterRng::from_seed(4);
  auto spec = random_shallow(3, 2, rng);
  for (auto& layer : spec.layers)
    for (auto& j : layer.lindblad.jumps) j.rate = RateSchedule::constant(0.4);
  std::vector<double> theta(static_cast<std::size_t>(spec.parameter_count()), 0.3);
  CHECK(trace_distance(shallow_evolve(spec, 0.5, theta), shallow_evolve(spec, 3.0, theta)) < 1e-12);
}

TEST_CASE("shallow circuit validation") {
  CounterRng rng = CounterRng::from_seed(8);
  auto spec = random_shallow(4, 1, rng);
  std::vector<double> theta(static_cast<std::size_t>(spec.parameter_count()), 0.1);
  CHECK_THROWS_AS(shallow_evolve(spec, 1.0, std::vector<double>(1, 0.0)), DomainError);
  auto deep = spec;
  deep.depth = 1;
  CHECK_THROWS_AS(deep.validate(), DomainError);
  auto wide = spec;
  wide.layers[0].lindblad.jumps[0].support = {0, 1};
  wide.layers[0].lindblad.jumps[0].op = kron(paulis::Z(), paulis::Z());
  CHECK_THROWS_AS(wide.validate(), DomainError);
  auto noncommuting = spec;
  noncommuting.layers[0].lindblad.jumps.push_back(Jump{paulis::X(), {0}, RateSchedule::constant(1.0)});
  noncommuting.layers[0].lindblad.jumps[0].op = paulis::Z();
  CHECK_THROWS_AS(noncommuting.validate(), DomainError);
}

TEST_CASE("light cone bounds") {
  ShallowLayer identity;
  CHECK(light_cone_norm_bound(identity, 4) == 1.5);

  ShallowLayer single;
  single.sublayers.push_back({Gate{{0, 1}, kron(paulis::X(), paulis::X())}, Gate{{2, 3}, kron(paulis::Z(), paulis::Z())}});
  CHECK(light_cone_norm_bound(single, 4) <= 1.5 * 2 * 2);
  CHECK(light_cone_norm_bound(single, 4) == 3.0);

  CounterRng rng = CounterRng::from_seed(1);
  const auto brick = random_shallow(6, 1, rng);
  CHECK(light_cone_size(brick.layers[0], 6, 2) == 4);
  CHECK(light_cone_norm_bound(brick.layers[0], 6) == 6.0);
}

TEST_CASE("stability budget for a single damped qubit") {
  const auto spec = damping_spec(RateSchedule::linear(0.5, 1.0, 0.0, 5.0));
  CHECK(spec.stability_rate() == doctest::Approx(1.5));
  const auto report = lindblad_stability(spec, DensityState::basis(1, 1), 1.0, {1.0, 1.0, 1.25});
  REQUIRE(report.pairs.size() == 3);
  CHECK(report.lipschitz == doctest::Approx(1.5));
  CHECK(report.pairs[0].measured == 0.0);
  CHECK(report.pairs[0].budget == 0.0);
  CHECK(report.all_pass());
  CHECK_THROWS_AS(lindblad_stability(spec, DensityState::basis(1, 1), 1.0, {4.0, 6.0}), DomainError);
}

TEST_CASE("random n=4 stability experiments pass") {
  CounterRng rng = CounterRng::from_seed(77);
  const std::vector<double> betas{1.0, 1.25, 1.5};
  for (int rep = 0; rep < 3; ++rep) {
    const auto spec = random_lindblad(4, rng);
    const auto rho = random_density(4, rng);
    for (double t : {0.5, 2.0}) CHECK(lindblad_stability(spec, rho, t, betas).all_pass());
  }
  const auto circuit = random_shallow(4, 2, rng);
  std::vector<double> theta(static_cast<std::size_t>(circuit.parameter_count()), 0.7);
  const auto report = shallow_stability(circuit, theta, betas);
  CHECK(report.all_pass());
  const auto j = to_json(report);
  CHECK(j["pairs"].size() == 3);
  CHECK(j["version"] == 1);
}
