#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "glasslab/replica.hpp"

using namespace glasslab;
using namespace glasslab::replica;

namespace {

std::vector<XiPath> sample_paths(const std::vector<double>& cov, int count, std::uint64_t seed) {
  PathSampler sampler(cov);
  CounterRng rng = CounterRng::from_seed(seed);
  const int n = sampler.size();
  std::vector<XiPath> out(static_cast<std::size_t>(count));
  for (auto& p : out)
    for (auto& c : p) c.resize(static_cast<std::size_t>(n));
  for (int i = 0; i + 1 < count; i += 2)
    for (int mu = 0; mu < 3; ++mu)
      sampler.sample_pair(rng, out[static_cast<std::size_t>(i)][static_cast<std::size_t>(mu)].data(),
                          out[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(mu)].data());
  return out;
}

}  // namespace

TEST_CASE("Liouville constants") {
  CHECK(liouville_b(3) == doctest::Approx(0.09189).epsilon(1e-4));
  CHECK(liouville_b(4) == doctest::Approx(0.07958).epsilon(1e-4));
  CHECK_THROWS_AS(liouville_b(2), DomainError);
}

TEST_CASE("Liouville kernel") {
  const auto k = liouville_init(4.0, 1.0, 3, 64);
  CHECK(k.n_tau() == 64);
  CHECK(k.G[0] == 3.0);
  CHECK(k.q0 == 0.0);
  CHECK(k.asymmetry() < 1e-12);
  for (int i = 1; i < 64; ++i) {
    CHECK(k.G[static_cast<std::size_t>(i)] > 0.0);
    CHECK(k.Sigma[static_cast<std::size_t>(i)] == doctest::Approx(k.G[static_cast<std::size_t>(i)] * k.G[static_cast<std::size_t>(i)]));
  }
  CHECK(k.G[1] > k.G[32]);
  CHECK_THROWS_AS(liouville_init(-1.0, 1.0, 3, 64), DomainError);
  CHECK_THROWS_AS(liouville_init(1.0, 1.0, 3, 7), DomainError);
}

TEST_CASE("free spin correlators") {
  const auto k = kernel_with_sigma(2.0, std::vector<double>(16, 0.0));
  const auto est = single_site_correlators(k, {0.0, 0.0, 0.0}, sample_paths(k.Sigma, 4, 1));
  CHECK(est.log_zeta == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  for (double a : est.a) CHECK(a == doctest::Approx(0.0).epsilon(1e-12));
  for (double g : est.G) CHECK(g == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("static field correlators") {
  const double beta = 1.5;
  const double h = 0.7;
  const auto k = kernel_with_sigma(beta, std::vector<double>(16, 0.0));
  const auto est = single_site_correlators(k, {0.0, 0.0, h}, sample_paths(k.Sigma, 2, 1));
  CHECK(est.log_zeta == doctest::Approx(std::log(2.0 * std::cosh(beta * h))).epsilon(1e-10));
  CHECK(est.a[2] == doctest::Approx(std::tanh(beta * h)).epsilon(1e-10));
  CHECK(est.a[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(est.G[0] == doctest::Approx(3.0).epsilon(1e-10));
}

TEST_CASE("trace identity under constant covariance") {
  const double beta = 2.0;
  for (double alpha : {1.0, 2.0, 4.0}) {
    const auto k = kernel_with_sigma(beta, std::vector<double>(16, alpha / (2.0 * beta * beta)));
    const auto est = single_site_correlators(k, {0.0, 0.0, 0.0}, sample_paths(k.Sigma, 200000, 7));
    const double expected = 2.0 * (1.0 + alpha / 2.0) * std::exp(alpha / 4.0);
    CHECK(std::exp(est.log_zeta) == doctest::Approx(expected).epsilon(0.01));
  }
}

TEST_CASE("path sampler") {
  std::vector<double> cov(32, 0.0);
  for (int i = 0; i < 32; ++i) cov[static_cast<std::size_t>(i)] = std::exp(-std::min(i, 32 - i) / 3.0);
  PathSampler with(cov);
  PathSampler without(cov, false);
  CHECK(with.clipped_fraction() == doctest::Approx(0.0));
  CHECK(with.static_variance() == 0.0);
  CHECK(without.static_variance() > 0.0);
  CounterRng rng = CounterRng::from_seed(3);
  std::vector<double> a(32), b(32);
  double c0 = 0.0, c5 = 0.0;
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    with.sample_pair(rng, a.data(), b.data());
    c0 += a[0] * a[0] + b[0] * b[0];
    c5 += a[0] * a[5] + b[0] * b[5];
  }
  CHECK(c0 / (2 * trials) == doctest::Approx(cov[0]).epsilon(0.03));
  CHECK(c5 / (2 * trials) == doctest::Approx(cov[5]).epsilon(0.05));
}

TEST_CASE("RS map is deterministic") {
  RsSolverConfig config;
  config.n_tau = 32;
  config.n_z = 16;
  config.n_xi = 8;
  auto k = liouville_init(2.0, 1.0, 3, 32);
  k.q0 = 0.5;
  k.refresh();
  const auto a = rs_map(k, config);
  const auto b = rs_map(k, config);
  CHECK(a.q0_new == b.q0_new);
  CHECK(a.G_new == b.G_new);
  CHECK(a.G_new[0] == doctest::Approx(3.0).epsilon(1e-9));
  config.seed = 2;
  CHECK(rs_map(k, config).q0_new != a.q0_new);
}

TEST_CASE("RS solve from zero overlap stays at zero") {
  RsSolverConfig config;
  config.n_tau = 32;
  config.n_z = 16;
  config.n_xi = 8;
  config.max_iters = 3;
  config.q0_init = 0.0;
  const auto r = rs_solve(1.0, 1.0, 3, config);
  CHECK(r.kernel.q0 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.kernel.G[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(r.iterations >= 1);
  CHECK(r.iterations <= 3);
}

TEST_CASE("solver config validation") {
  RsSolverConfig config;
  config.n_tau = 7;
  CHECK_THROWS_AS(config.validate(), DomainError);
  config = {};
  config.mixing = 0.0;
  CHECK_THROWS_AS(config.validate(), DomainError);
  config = {};
  CHECK_NOTHROW(config.validate());
}

TEST_CASE("TAP complexity vanishes at zero overlap") {
  const auto k = liouville_init(2.0, 1.0, 3, 32);
  TapConfig config;
  config.n_z = 16;
  config.n_xi = 8;
  const auto r = tap_complexity(k, 0.0, config);
  CHECK(r.S == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.energy_term == 0.0);
  CHECK_THROWS_AS(tap_complexity(k, -0.1, config), DomainError);
}

TEST_CASE("kernel JSON round trip") {
  auto k = liouville_init(3.0, 1.0, 3, 16);
  k.q0 = 0.25;
  k.refresh();
  const auto back = kernel_from_json(to_json(k));
  CHECK(back.beta == k.beta);
  CHECK(back.p == k.p);
  CHECK(back.G == k.G);
  CHECK(back.q0 == k.q0);
  CHECK(back.q0_hat == doctest::Approx(k.q0_hat));
}

TEST_CASE("temperature scan orders and chains solutions") {
  RsSolverConfig config;
  config.n_tau = 16;
  config.n_z = 8;
  config.n_xi = 4;
  config.max_iters = 2;
  const auto points = rs_scan({2.0, 1.0}, 1.0, 3, config, 0.5);
  REQUIRE(points.size() == 2);
  CHECK(points[0].beta == 1.0);
  CHECK(points[1].beta == 2.0);
  for (const auto& point : points) {
    CHECK(point.ok);
    CHECK(point.report.kernel.beta == point.beta);
  }
  CHECK(std::isnan(scan_crossover(points, 10.0)));
  CHECK_THROWS_AS(rs_scan({}, 1.0, 3, config), DomainError);
}
