#include "glasslab/glass.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "glasslab/exactq.hpp"

namespace glasslab::glass {

namespace {

using Bloch = std::vector<std::array<double, 3>>;

constexpr double kZeroWeight = 1e-14;

Bloch pure_bloch(const Eigen::VectorXcd& v, int n) {
  Bloch b(static_cast<std::size_t>(n), {0.0, 0.0, 0.0});
  const Eigen::Index dim = v.size();
  for (int r = 0; r < n; ++r) {
    const Eigen::Index mask = Eigen::Index{1} << r;
    double x = 0.0, y = 0.0, z = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double p = std::norm(v(i));
      if (i & mask) {
        z -= p;
        continue;
      }
      z += p;
      const Complex c = std::conj(v(i)) * v(i | mask);
      x += 2.0 * c.real();
      y += 2.0 * c.imag();
    }
    b[static_cast<std::size_t>(r)] = {x, y, z};
  }
  return b;
}

double bloch_sq_dist(const Bloch& a, const Bloch& b) {
  double s = 0.0;
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t mu = 0; mu < 3; ++mu) s += (a[r][mu] - b[r][mu]) * (a[r][mu] - b[r][mu]);
  return s;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
      i = parent[static_cast<std::size_t>(i)];
    }
    return i;
  }
  void join(int a, int b) { parent[static_cast<std::size_t>(find(a))] = find(b); }
};

// Generic one-local field used to pick a basis inside degenerate eigenspaces.
Matrix tie_breaker(int n) {
  CounterRng rng = CounterRng::from_seed(0x7e1b7ea6ULL);
  const Eigen::Index dim = Eigen::Index{1} << n;
  Matrix o = Matrix::Zero(dim, dim);
  for (int r = 0; r < n; ++r)
    for (char letter : {'X', 'Y', 'Z'}) pauli::add_scaled(pauli::PauliString::single(r, letter), rng.gaussian(), o);
  return o;
}

struct Eigenbasis {
  RealVector weights;
  Matrix vectors;
};

Eigenbasis resolved_eigenbasis(const DensityState& rho, double tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(rho.matrix());
  if (eig.info() != Eigen::Success) throw NumericalError("density matrix eigendecomposition failed");
  Eigenbasis e{eig.eigenvalues(), eig.eigenvectors()};
  const Eigen::Index dim = e.weights.size();
  Matrix field;
  Eigen::Index start = 0;
  while (start < dim) {
    Eigen::Index end = start + 1;
    while (end < dim && e.weights(end) - e.weights(start) <= tol) ++end;
    const Eigen::Index k = end - start;
    if (k > 1 && e.weights(start) > kZeroWeight) {
      if (field.size() == 0) field = tie_breaker(rho.n());
      const Matrix block = e.vectors.middleCols(start, k);
      Eigen::SelfAdjointEigenSolver<Matrix> local(block.adjoint() * field * block);
      e.vectors.middleCols(start, k) = block * local.eigenvectors();
    }
    start = end;
  }
  return e;
}

// Groups of eigenvector indices forming the clusters, plus what falls to the residual.
struct Grouping {
  Eigenbasis basis;
  std::vector<Bloch> bloch;
  std::vector<std::vector<Eigen::Index>> clusters;
  double residual = 0.0;
};

Grouping group_eigenvectors(const DensityState& rho, double q, const DetectOptions& options) {
  require(q > 0.0, "cluster separation q must be positive");
  require(options.weight_floor >= 0.0, "weight floor must be nonnegative");
  Grouping g{resolved_eigenbasis(rho, options.degeneracy_tol), {}, {}, 0.0};
  const int n = rho.n();
  const double threshold = q * n;
  std::vector<Eigen::Index> core, light;
  for (Eigen::Index k = g.basis.weights.size() - 1; k >= 0; --k) {
    const double w = g.basis.weights(k);
    if (w <= kZeroWeight) {
      g.residual += std::max(w, 0.0);
      continue;
    }
    (w >= options.weight_floor ? core : light).push_back(k);
  }
  std::vector<Eigen::Index> members;
  members.insert(members.end(), core.begin(), core.end());
  members.insert(members.end(), light.begin(), light.end());
  const int m = static_cast<int>(members.size());
  for (Eigen::Index k : members) g.bloch.push_back(pure_bloch(g.basis.vectors.col(k), n));

  UnionFind uf(m);
  const int n_core = static_cast<int>(core.size());
  for (int i = 0; i < n_core; ++i)
    for (int j = 0; j < i; ++j)
      if (bloch_sq_dist(g.bloch[static_cast<std::size_t>(i)], g.bloch[static_cast<std::size_t>(j)]) < threshold) uf.join(i, j);
  // light eigenvectors attach to the nearest core eigenvector without bridging core components
  std::vector<int> loose;
  for (int i = n_core; i < m; ++i) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n_core; ++j) {
      const double d = bloch_sq_dist(g.bloch[static_cast<std::size_t>(i)], g.bloch[static_cast<std::size_t>(j)]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (best >= 0 && best_d < threshold)
      uf.parent[static_cast<std::size_t>(i)] = uf.find(best);
    else
      loose.push_back(i);
  }
  for (std::size_t a = 0; a < loose.size(); ++a)
    for (std::size_t b = 0; b < a; ++b)
      if (bloch_sq_dist(g.bloch[static_cast<std::size_t>(loose[a])], g.bloch[static_cast<std::size_t>(loose[b])]) < threshold)
        uf.join(loose[a], loose[b]);

  std::vector<std::vector<int>> comps;
  std::vector<int> slot(static_cast<std::size_t>(m), -1);
  for (int i = 0; i < m; ++i) {
    const int root = uf.find(i);
    if (slot[static_cast<std::size_t>(root)] < 0) {
      slot[static_cast<std::size_t>(root)] = static_cast<int>(comps.size());
      comps.emplace_back();
    }
    comps[static_cast<std::size_t>(slot[static_cast<std::size_t>(root)])].push_back(i);
  }
  std::vector<std::vector<int>> kept;
  for (auto& c : comps) {
    double w = 0.0;
    for (int i : c) w += g.basis.weights(members[static_cast<std::size_t>(i)]);
    if (w < options.weight_floor)
      g.residual += w;
    else
      kept.push_back(c);
  }
  // Bloch vectors are re-indexed by eigenvector for later use
  std::vector<Bloch> by_index(static_cast<std::size_t>(g.basis.weights.size()));
  for (int i = 0; i < m; ++i) by_index[static_cast<std::size_t>(members[static_cast<std::size_t>(i)])] = g.bloch[static_cast<std::size_t>(i)];
  g.bloch = std::move(by_index);
  for (const auto& c : kept) {
    std::vector<Eigen::Index> idx;
    for (int i : c) idx.push_back(members[static_cast<std::size_t>(i)]);
    g.clusters.push_back(std::move(idx));
  }
  return g;
}

Bloch cluster_bloch(const Grouping& g, const std::vector<Eigen::Index>& idx, double& weight) {
  const std::size_t n = g.bloch[static_cast<std::size_t>(idx.front())].size();
  Bloch b(n, {0.0, 0.0, 0.0});
  weight = 0.0;
  for (Eigen::Index k : idx) {
    const double w = g.basis.weights(k);
    weight += w;
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t mu = 0; mu < 3; ++mu) b[r][mu] += w * g.bloch[static_cast<std::size_t>(k)][r][mu];
  }
  for (auto& v : b)
    for (double& x : v) x /= weight;
  return b;
}

double min_separation(const std::vector<Bloch>& blochs, int n) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < blochs.size(); ++i)
    for (std::size_t j = 0; j < i; ++j) best = std::min(best, bloch_sq_dist(blochs[i], blochs[j]) / n);
  return best;
}

std::vector<Bloch> states_bloch(const std::vector<Cluster>& clusters) {
  std::vector<Bloch> out;
  for (const Cluster& c : clusters) out.push_back(c.state.bloch_vectors());
  return out;
}

Matrix mixture(const std::vector<Cluster>& clusters, Eigen::Index dim) {
  Matrix m = Matrix::Zero(dim, dim);
  for (const Cluster& c : clusters) m += c.weight * c.state.matrix();
  return m;
}

}  // namespace

void measure(const DensityState& rho, ClusterDecomposition& cand) {
  require(!cand.clusters.empty(), "cluster list is empty");
  for (const Cluster& c : cand.clusters) require(c.state.n() == rho.n(), "cluster state has the wrong qubit count");
  cand.eps_achieved = 0.5 * trace_norm(rho.matrix() - mixture(cand.clusters, rho.dim()));
  cand.q_achieved = min_separation(states_bloch(cand.clusters), rho.n());
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const Cluster& c : cand.clusters) {
    lo = std::min(lo, c.weight);
    hi = std::max(hi, c.weight);
  }
  cand.ratio = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

DecompositionReport check_decomposition(const DensityState& rho, const ClusterDecomposition& cand, double eps, double q,
                                        double ratio_cap) {
  require(q > 0.0, "separation q must be positive");
  require(eps >= 0.0 && ratio_cap >= 1.0, "eps must be nonnegative and the ratio cap at least 1");
  ClusterDecomposition measured = cand;
  measure(rho, measured);
  DecompositionReport r;
  r.M = measured.M();
  r.multiple_clusters = r.M >= 2;
  double total = 0.0;
  r.weights_valid = true;
  for (const Cluster& c : cand.clusters) {
    total += c.weight;
    if (!(c.weight > 0.0)) r.weights_valid = false;
  }
  if (total > 1.0 + 1e-9) r.weights_valid = false;
  r.eps_measured = measured.eps_achieved;
  r.eps_ok = r.eps_measured <= eps + kCheckSlack;
  r.q_measured = measured.q_achieved;
  r.separation_ok = r.q_measured >= q - kCheckSlack;
  r.ratio = measured.ratio;
  r.ratio_ok = r.ratio <= ratio_cap * (1.0 + kCheckSlack);
  r.pass = r.multiple_clusters && r.weights_valid && r.eps_ok && r.separation_ok && r.ratio_ok;
  return r;
}

ClusterDecomposition detect_clusters(const DensityState& rho, double q, const DetectOptions& options) {
  const Grouping g = group_eigenvectors(rho, q, options);
  ClusterDecomposition out;
  for (const auto& idx : g.clusters) {
    double w = 0.0;
    for (Eigen::Index k : idx) w += g.basis.weights(k);
    Matrix m = Matrix::Zero(rho.dim(), rho.dim());
    for (Eigen::Index k : idx) m += (g.basis.weights(k) / w) * g.basis.vectors.col(k) * g.basis.vectors.col(k).adjoint();
    out.clusters.push_back(Cluster{w, DensityState::from_trusted(rho.n(), std::move(m))});
  }
  if (out.clusters.empty()) return out;
  measure(rho, out);
  return out;
}

ClusterSummary summarize_clusters(const DensityState& rho, double q, const DetectOptions& options) {
  const Grouping g = group_eigenvectors(rho, q, options);
  ClusterSummary s;
  s.M = static_cast<int>(g.clusters.size());
  s.eps_achieved = 0.5 * g.residual;
  std::vector<Bloch> blochs;
  for (const auto& idx : g.clusters) {
    double w = 0.0;
    blochs.push_back(cluster_bloch(g, idx, w));
    s.weights.push_back(w);
  }
  s.q_achieved = min_separation(blochs, rho.n());
  return s;
}

bool robustness_check(const DensityState& rho, const DensityState& rho_tilde, const ClusterDecomposition& cand,
                      double eps, double delta, double q, double ratio_cap) {
  require(rho.n() == rho_tilde.n(), "states disagree on n");
  if (!check_decomposition(rho, cand, eps, q, ratio_cap).pass) return true;
  if (trace_distance(rho, rho_tilde) > delta + kCheckSlack) return true;
  return check_decomposition(rho_tilde, cand, eps + delta, q, ratio_cap).pass;
}

double local_channel_wc_budget(int k, double trace_displacement) {
  require(k >= 1, "channel support must be nonempty");
  require(trace_displacement >= 0.0 && trace_displacement <= 2.0, "trace displacement must lie in [0, 2]");
  return 0.75 * k * trace_displacement;
}

std::string to_string(PreservationStatus s) {
  switch (s) {
    case PreservationStatus::Pass:
      return "pass";
    case PreservationStatus::Fail:
      return "fail";
    case PreservationStatus::Inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

PreservationReport channel_preservation_check(const DensityState& rho, const ClusterDecomposition& cand,
                                              const transport::Channel& channel, double eps, double q,
                                              std::optional<double> budget, const std::vector<DensityState>& probes) {
  require(q > 0.0, "separation q must be positive");
  require(!cand.clusters.empty(), "cluster list is empty");
  const int n = rho.n();
  PreservationReport r;
  r.budget_cap = q * n / 144.0;
  r.wc_lower = transport::wc_lower(channel, probes.empty() ? transport::default_probes(n) : probes);
  ClusterDecomposition image;
  for (const Cluster& c : cand.clusters) image.clusters.push_back(Cluster{c.weight, channel(c.state)});
  const DensityState sigma = channel(rho);
  measure(sigma, image);
  r.image_q = image.q_achieved;
  r.image_eps = image.eps_achieved;
  r.image_pass = image.M() == cand.M() && image.M() >= 2 && r.image_eps <= eps + kCheckSlack &&
                 r.image_q >= 4.0 * q / 9.0 - kCheckSlack;
  if (budget) {
    r.budget = *budget;
    r.budget_certified = *budget <= r.budget_cap && *budget >= r.wc_lower - kCheckSlack;
    const double root = std::sqrt(q) - 4.0 * std::sqrt(*budget / n);
    r.triangle_bound = root > 0.0 ? root * root : 0.0;
  }
  if (r.budget_certified) r.status = r.image_pass ? PreservationStatus::Pass : PreservationStatus::Fail;
  return r;
}

pauli::PauliHamiltonian classical_pspin(int n, int p, double J, std::uint64_t seed) {
  require(p >= 1 && p <= n, "p must lie in [1, n]");
  require(J > 0.0, "J must be positive");
  const double sd = std::sqrt(pauli::ensemble_variance(n, p, J));
  CounterRng rng = CounterRng::from_seed(seed);
  std::vector<pauli::Term> terms;
  std::vector<int> pick(static_cast<std::size_t>(p));
  std::iota(pick.begin(), pick.end(), 0);
  while (true) {
    pauli::PauliString s;
    for (int q : pick) s.z_mask |= std::uint64_t{1} << q;
    terms.push_back({sd * rng.gaussian(), s});
    int i = p - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == n - p + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < p; ++k) pick[static_cast<std::size_t>(k)] = pick[static_cast<std::size_t>(k - 1)] + 1;
  }
  return pauli::PauliHamiltonian(n, std::move(terms), pauli::EnsembleInfo{p, J, seed});
}

std::vector<ScanRow> transition_scan(const ScanConfig& config) {
  require(!config.betas.empty() && !config.seeds.empty(), "scan needs betas and seeds");
  std::vector<ScanRow> rows;
  for (std::uint64_t seed : config.seeds) {
    const auto h = config.classical ? classical_pspin(config.n, config.p, config.J, seed)
                                    : pauli::sample_ensemble(config.n, config.p, config.J, seed);
    const Matrix dense = pauli::to_dense(h);
    for (double beta : config.betas) {
      const DensityState rho = exactq::gibbs_state(dense, config.n, beta).state;
      const ClusterSummary s = summarize_clusters(rho, config.q, config.detect);
      double overlap = 0.0;
      for (const auto& b : rho.bloch_vectors()) overlap += b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
      rows.push_back({seed, beta, s.M, s.q_achieved, s.eps_achieved, overlap / config.n});
    }
  }
  return rows;
}

std::string scan_csv(const std::vector<ScanRow>& rows) {
  std::ostringstream out;
  out.precision(10);
  out << "seed,beta,M,q_achieved,eps_achieved,self_overlap\n";
  for (const ScanRow& r : rows) {
    out << r.seed << ',' << r.beta << ',' << r.M << ',';
    if (std::isfinite(r.q_achieved))
      out << r.q_achieved;
    else
      out << "inf";
    out << ',' << r.eps_achieved << ',' << r.self_overlap << '\n';
  }
  return out.str();
}

nlohmann::json scan_json(const std::vector<ScanRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  for (const ScanRow& r : rows)
    arr.push_back({{"seed", r.seed},
                   {"beta", r.beta},
                   {"M", r.M},
                   {"q_achieved", std::isfinite(r.q_achieved) ? nlohmann::json(r.q_achieved) : nlohmann::json(nullptr)},
                   {"eps_achieved", r.eps_achieved},
                   {"self_overlap", r.self_overlap}});
  return {{"schema", "glasslab.glass_scan"}, {"version", 1}, {"rows", arr}};
}

ClusterDecomposition two_cluster_fixture(int n, DensityState* rho) {
  require(n >= 1 && n <= 12, "fixture size out of range");
  const std::uint64_t ones = (std::uint64_t{1} << n) - 1;
  ClusterDecomposition d;
  d.clusters.push_back(Cluster{0.5, DensityState::basis(n, 0)});
  d.clusters.push_back(Cluster{0.5, DensityState::basis(n, ones)});
  Matrix m = 0.5 * (d.clusters[0].state.matrix() + d.clusters[1].state.matrix());
  const DensityState mix = DensityState::from_trusted(n, std::move(m));
  measure(mix, d);
  if (rho) *rho = mix;
  return d;
}

}  // namespace glasslab::glass
