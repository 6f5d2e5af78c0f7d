#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "glasslab/exactq.hpp"
#include "glasslab/glass.hpp"

using namespace glasslab;
using namespace glasslab::glass;

namespace {

transport::Channel depolarize_first(double p) {
  return [p](const DensityState& rho) {
    const int n = rho.n();
    Matrix out = (1.0 - 0.75 * p) * rho.matrix();
    for (char letter : {'X', 'Y', 'Z'}) {
      const Matrix s = pauli::to_dense(pauli::PauliString::single(0, letter), n);
      out += 0.25 * p * s * rho.matrix() * s;
    }
    return DensityState::from_trusted(n, out);
  };
}

pauli::PauliHamiltonian ferromagnet(int n) {
  std::vector<pauli::Term> terms;
  for (int r = 0; r + 1 < n; ++r) {
    pauli::PauliString s;
    s.z_mask = (std::uint64_t{1} << r) | (std::uint64_t{1} << (r + 1));
    terms.push_back({-1.0, s});
  }
  return pauli::PauliHamiltonian(n, terms);
}

}  // namespace

TEST_CASE("two-cluster fixture passes") {
  DensityState rho = DensityState::maximally_mixed(6);
  const auto cand = two_cluster_fixture(6, &rho);
  CHECK(cand.q_achieved == doctest::Approx(4.0));
  CHECK(cand.eps_achieved == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cand.ratio == doctest::Approx(1.0));
  const auto r = check_decomposition(rho, cand, 0.0, 4.0);
  CHECK(r.pass);
  CHECK_FALSE(check_decomposition(rho, cand, 0.0, 4.1).pass);
}

TEST_CASE("single cluster is not a glass witness") {
  const auto rho = DensityState::basis(4, 3);
  ClusterDecomposition cand;
  cand.clusters.push_back({1.0, rho});
  const auto r = check_decomposition(rho, cand, 0.1, 1.0);
  CHECK_FALSE(r.multiple_clusters);
  CHECK_FALSE(r.pass);
  CHECK(r.eps_ok);
}

TEST_CASE("identical clusters fail the separation check") {
  const auto rho = DensityState::basis(3, 0);
  ClusterDecomposition cand;
  cand.clusters.push_back({0.5, rho});
  cand.clusters.push_back({0.5, rho});
  const auto r = check_decomposition(rho, cand, 0.0, 0.5);
  CHECK(r.eps_ok);
  CHECK_FALSE(r.separation_ok);
  CHECK_FALSE(r.pass);
}

TEST_CASE("weight ratio and validity") {
  DensityState rho = DensityState::maximally_mixed(4);
  auto cand = two_cluster_fixture(4, &rho);
  cand.clusters[0].weight = 0.99;
  cand.clusters[1].weight = 0.005;
  const auto r = check_decomposition(rho, cand, 1.0, 1.0);
  CHECK(r.ratio == doctest::Approx(198.0));
  CHECK_FALSE(r.ratio_ok);
  cand.clusters[1].weight = 0.5;
  CHECK_FALSE(check_decomposition(rho, cand, 1.0, 1.0).weights_valid);
  cand.clusters[1].weight = 0.0;
  CHECK_FALSE(check_decomposition(rho, cand, 1.0, 1.0).weights_valid);
}

TEST_CASE("check is monotone in eps and q") {
  CounterRng rng = CounterRng::from_seed(5);
  DensityState rho = DensityState::maximally_mixed(5);
  auto cand = two_cluster_fixture(5, &rho);
  const DensityState noisy = DensityState::from_trusted(5, 0.9 * rho.matrix() + 0.1 * random_density(5, rng).matrix());
  const auto base = check_decomposition(noisy, cand, 0.1, 3.0);
  REQUIRE(base.pass);
  for (double eps : {0.1, 0.2, 0.5})
    for (double q : {3.0, 2.0, 0.5}) CHECK(check_decomposition(noisy, cand, eps, q).pass);
}

TEST_CASE("check rejects bad input") {
  DensityState rho = DensityState::maximally_mixed(3);
  auto cand = two_cluster_fixture(3, &rho);
  CHECK_THROWS_AS(check_decomposition(rho, cand, 0.0, 0.0), DomainError);
  CHECK_THROWS_AS(check_decomposition(DensityState::basis(2, 0), cand, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(check_decomposition(rho, ClusterDecomposition{}, 0.0, 1.0), DomainError);
}

TEST_CASE("detect on a pure state") {
  CounterRng rng = CounterRng::from_seed(9);
  const auto rho = random_density(4, rng, 1);
  const auto d = detect_clusters(rho, 1.0);
  CHECK(d.M() == 1);
  CHECK(d.eps_achieved == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(std::isinf(d.q_achieved));
}

TEST_CASE("detect at infinite temperature finds one cluster") {
  const auto rho = DensityState::maximally_mixed(6);
  const auto d = detect_clusters(rho, 1.0);
  CHECK(d.M() == 1);
  CHECK(d.eps_achieved == doctest::Approx(0.0).epsilon(1e-10));
  const auto s = summarize_clusters(rho, 1.0);
  CHECK(s.M == 1);
  CHECK(s.weights[0] == doctest::Approx(1.0));
}

TEST_CASE("detect recovers the fixture") {
  DensityState rho = DensityState::maximally_mixed(6);
  two_cluster_fixture(6, &rho);
  const auto d = detect_clusters(rho, 1.0);
  REQUIRE(d.M() == 2);
  CHECK(d.q_achieved == doctest::Approx(4.0));
  CHECK(check_decomposition(rho, d, d.eps_achieved, d.q_achieved).pass);
}

TEST_CASE("cold ferromagnet splits in two") {
  const auto rho = exactq::gibbs_state(ferromagnet(6), 5.0).state;
  const auto d = detect_clusters(rho, 1.0);
  REQUIRE(d.M() == 2);
  CHECK(d.clusters[0].weight == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(d.eps_achieved < 1e-3);
  CHECK(d.q_achieved > 3.9);
  CHECK(check_decomposition(rho, d, d.eps_achieved, 1.0).pass);
  const auto s = summarize_clusters(rho, 1.0);
  CHECK(s.M == 2);
  CHECK(s.eps_achieved == doctest::Approx(d.eps_achieved).epsilon(1e-8));
  CHECK(s.q_achieved == doctest::Approx(d.q_achieved).epsilon(1e-8));
  CHECK(detect_clusters(exactq::gibbs_state(ferromagnet(6), 0.1).state, 1.0).M() == 1);
}

TEST_CASE("detected clusters pass their own achieved parameters") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto rho = exactq::gibbs_state(classical_pspin(5, 3, 1.0, seed), 4.0).state;
    const auto d = detect_clusters(rho, 0.5);
    if (d.M() < 2) continue;
    CHECK(check_decomposition(rho, d, d.eps_achieved, d.q_achieved, 1e12).pass);
  }
}

TEST_CASE("robustness under small perturbations") {
  DensityState rho = DensityState::maximally_mixed(5);
  const auto cand = two_cluster_fixture(5, &rho);
  CounterRng rng = CounterRng::from_seed(21);
  for (int trial = 0; trial < 20; ++trial) {
    const double delta = 0.02 * (trial + 1);
    const auto other = random_density(5, rng);
    const DensityState tilde = DensityState::from_trusted(5, (1.0 - delta) * rho.matrix() + delta * other.matrix());
    CHECK(robustness_check(rho, tilde, cand, 0.0, delta, 4.0));
  }
  CHECK(robustness_check(rho, DensityState::basis(5, 1), cand, 0.0, 0.01, 4.0));
}

TEST_CASE("local channel budget") {
  CHECK(local_channel_wc_budget(1) == doctest::Approx(1.5));
  CHECK(local_channel_wc_budget(2, 0.1) == doctest::Approx(0.15));
  CHECK_THROWS_AS(local_channel_wc_budget(0), DomainError);
  CHECK_THROWS_AS(local_channel_wc_budget(1, 3.0), DomainError);
}

TEST_CASE("weak depolarizing preserves the clusters") {
  DensityState rho = DensityState::maximally_mixed(6);
  const auto cand = two_cluster_fixture(6, &rho);
  const double p = 0.1;
  const double b = local_channel_wc_budget(1, p);
  const auto r = channel_preservation_check(rho, cand, depolarize_first(p), 0.0, 4.0, b);
  CHECK(r.budget_cap == doctest::Approx(4.0 * 6 / 144.0));
  CHECK(r.budget_certified);
  CHECK(r.wc_lower <= b + 1e-12);
  CHECK(r.image_pass);
  CHECK(r.status == PreservationStatus::Pass);
  CHECK(r.image_q >= r.triangle_bound - 1e-9);
  CHECK(r.image_q >= 4.0 * 4.0 / 9.0);
}

TEST_CASE("replacement by the maximally mixed state is inconclusive") {
  DensityState rho = DensityState::maximally_mixed(6);
  const auto cand = two_cluster_fixture(6, &rho);
  const transport::Channel wipe = [](const DensityState& s) { return DensityState::maximally_mixed(s.n()); };
  const auto r = channel_preservation_check(rho, cand, wipe, 0.0, 4.0, local_channel_wc_budget(6));
  CHECK_FALSE(r.budget_certified);
  CHECK_FALSE(r.image_pass);
  CHECK(r.status == PreservationStatus::Inconclusive);
  CHECK(to_string(r.status) == "inconclusive");
  const auto none = channel_preservation_check(rho, cand, depolarize_first(0.1), 0.0, 4.0, std::nullopt);
  CHECK(none.status == PreservationStatus::Inconclusive);
}

TEST_CASE("understated budget is not certified") {
  DensityState rho = DensityState::maximally_mixed(4);
  const auto cand = two_cluster_fixture(4, &rho);
  const auto r = channel_preservation_check(rho, cand, depolarize_first(0.2), 0.0, 4.0, 1e-6);
  CHECK(r.wc_lower > 1e-6);
  CHECK_FALSE(r.budget_certified);
}

TEST_CASE("classical p-spin instance") {
  const auto h = classical_pspin(6, 3, 1.0, 4);
  CHECK(h.terms().size() == 20);
  for (const auto& t : h.terms()) {
    CHECK(t.string.x_mask == 0);
    CHECK(std::popcount(t.string.z_mask) == 3);
  }
  CHECK(classical_pspin(6, 3, 1.0, 4).terms()[7].coeff == h.terms()[7].coeff);
  CHECK_THROWS_AS(classical_pspin(3, 4, 1.0, 1), DomainError);
}

TEST_CASE("transition scan output") {
  ScanConfig config;
  config.n = 4;
  config.q = 1.5;
  config.betas = {0.0, 2.0};
  config.seeds = {1, 2};
  const auto rows = transition_scan(config);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].M == 1);
  CHECK(rows[0].self_overlap == doctest::Approx(0.0).epsilon(1e-12));
  const auto again = transition_scan(config);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].M == again[i].M);
    CHECK(rows[i].self_overlap == again[i].self_overlap);
  }
  const auto csv = scan_csv(rows);
  CHECK(csv.rfind("seed,beta,M,q_achieved,eps_achieved,self_overlap\n", 0) == 0);
  const auto j = scan_json(rows);
  CHECK(j["schema"] == "glasslab.glass_scan");
  CHECK(j["rows"].size() == 4);
  CHECK_THROWS_AS(transition_scan(ScanConfig{}), DomainError);
}
