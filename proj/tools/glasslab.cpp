#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "glasslab/analytic.hpp"
#include "glasslab/exactq.hpp"
#include "glasslab/glass.hpp"
#include "glasslab/pauli.hpp"
#include "glasslab/replica.hpp"
#include "glasslab/transport.hpp"

using namespace glasslab;
using nlohmann::json;

namespace {

constexpr int kUsageExit = 64;

struct Output {
  json result;
  std::string csv;  // used when --format csv is requested and the command supports it
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open " + path);
  return json::parse(in);
}

json bloch_json(const DensityState& s) {
  json out = json::array();
  for (const auto& b : s.bloch_vectors()) out.push_back({b[0], b[1], b[2]});
  return out;
}

std::uint64_t env_seed() {
  if (const char* s = std::getenv("GLASSLAB_SEED")) {
    try {
      return std::stoull(s);
    } catch (const std::exception&) {
      throw DomainError("GLASSLAB_SEED is not an unsigned integer");
    }
  }
  return 1;
}

exactq::Backend parse_backend(const std::string& name) {
  if (name == "superoperator") return exactq::Backend::Superoperator;
  if (name == "ode") return exactq::Backend::Ode;
  return exactq::Backend::Auto;
}

std::vector<double> grid(double lo, double hi, double step) {
  require(step > 0.0 && hi >= lo, "grid needs step > 0 and max >= min");
  std::vector<double> out;
  for (int i = 0; lo + i * step <= hi + 1e-9; ++i) out.push_back(lo + i * step);
  return out;
}

using CsvRows = std::vector<std::pair<std::vector<std::string>, std::vector<std::pair<std::string, double>>>>;

/// Long-form CSV: key columns, then one (key, value) pair per line.
std::string long_csv(const std::vector<std::string>& keys, const CsvRows& rows) {
  std::ostringstream out;
  out.precision(12);
  for (const auto& k : keys) out << k << ',';
  out << "key,value\n";
  for (const auto& [key_values, values] : rows)
    for (const auto& [name, v] : values) {
      if (!std::isfinite(v)) continue;
      for (const auto& kv : key_values) out << kv << ',';
      out << name << ',' << v << '\n';
    }
  return out.str();
}

json typed(const std::string& text) {
  if (text == "true") return true;
  if (text == "false") return false;
  try {
    std::size_t used = 0;
    const long long i = std::stoll(text, &used);
    if (used == text.size()) return i;
    const double d = std::stod(text, &used);
    if (used == text.size()) return d;
  } catch (const std::exception&) {
  }
  return text;
}

json resolved_config(const CLI::App* app) {
  json config = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->get_lnames().empty() || opt->get_lnames()[0] == "help") continue;
    const std::string key = opt->get_lnames()[0];
    const bool flag = opt->get_items_expected_max() == 0;
    if (flag) {
      config[key] = opt->count() > 0;
    } else if (opt->count() == 0) {
      config[key] = typed(opt->get_default_str());
    } else if (opt->get_expected_max() > 1) {
      json values = json::array();
      for (const auto& r : opt->results()) values.push_back(typed(r));
      config[key] = values;
    } else {
      config[key] = typed(opt->results().back());
    }
  }
  return config;
}

int run(std::vector<std::string> args) {
  CLI::App app{"glasslab: quantum glass numerics"};
  app.name("glasslab");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = env_seed();
  std::string out_path;
  std::string format = "json";
  int threads = 1;
  bool verbose = false;
  app.add_option("--seed", seed, "Random seed (falls back to GLASSLAB_SEED)");
  app.add_option("--out", out_path, "Write the artifact here instead of stdout");
  app.add_option("--format", format, "Artifact format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--threads", threads, "Worker cap")->check(CLI::PositiveNumber);
  app.add_flag("-v,--verbose", verbose, "Progress on stderr");

  std::vector<std::pair<CLI::App*, std::function<Output()>>> commands;
  auto command = [](CLI::App* parent, const std::string& name, const std::string& help) {
    return parent->add_subcommand(name, help);
  };

  // ensemble
  int n = 4, p = 3;
  double J = 1.0;
  CLI::App* ensemble = command(&app, "ensemble", "Sample a random p-local Pauli Hamiltonian");
  ensemble->add_option("--n", n, "Qubits")->check(CLI::Range(1, 20));
  ensemble->add_option("--p", p, "Locality")->check(CLI::PositiveNumber);
  ensemble->add_option("--J", J, "Coupling scale");
  commands.push_back({ensemble, [&] { return Output{pauli::to_json(pauli::sample_ensemble(n, p, J, seed)), ""}; }});

  // gibbs
  double beta = 1.0;
  std::string hamiltonian_path;
  bool with_state = false;
  CLI::App* gibbs = command(&app, "gibbs", "Exact Gibbs state of a sampled or given Hamiltonian");
  gibbs->add_option("--n", n, "Qubits")->check(CLI::Range(1, 12));
  gibbs->add_option("--p", p, "Locality")->check(CLI::PositiveNumber);
  gibbs->add_option("--J", J, "Coupling scale");
  gibbs->add_option("--beta", beta, "Inverse temperature");
  gibbs->add_option("--hamiltonian", hamiltonian_path, "Hamiltonian JSON instead of sampling");
  gibbs->add_flag("--with-state", with_state, "Include the density matrix");
  commands.push_back({gibbs, [&] {
                        const auto h = hamiltonian_path.empty() ? pauli::sample_ensemble(n, p, J, seed)
                                                                : pauli::hamiltonian_from_json(read_json(hamiltonian_path));
                        const auto g = exactq::gibbs_state(h, beta);
                        json r = {{"n", h.n()},
                                  {"log_z", g.log_z},
                                  {"free_energy", std::isfinite(g.free_energy) ? json(g.free_energy) : json(nullptr)},
                                  {"purity", g.state.purity()},
                                  {"bloch", bloch_json(g.state)}};
                        if (with_state) r["state"] = to_json(g.state);
                        return Output{r, ""};
                      }});

  // lindblad
  double t = 1.0;
  std::string backend = "auto";
  CLI::App* lindblad = command(&app, "lindblad", "Evolve |0...0> under a random Lindbladian");
  lindblad->add_option("--n", n, "Qubits")->check(CLI::Range(1, 6));
  lindblad->add_option("--beta", beta, "Inverse temperature");
  lindblad->add_option("--t", t, "Evolution time");
  lindblad->add_option("--backend", backend, "Solver")->check(CLI::IsMember({"auto", "superoperator", "ode"}));
  commands.push_back({lindblad, [&] {
                        CounterRng rng = CounterRng::from_seed(seed);
                        const auto spec = exactq::random_lindblad(n, rng);
                        exactq::EvolveOptions options;
                        options.backend = parse_backend(backend);
                        const auto rho0 = DensityState::basis(n, 0);
                        const auto rho = exactq::lindblad_evolve(spec, beta, rho0, t, options);
                        return Output{{{"n", n},
                                       {"jumps", spec.jumps.size()},
                                       {"stability_rate", spec.stability_rate()},
                                       {"purity", rho.purity()},
                                       {"trace_distance_from_initial", trace_distance(rho, rho0)},
                                       {"w1_lower_from_initial", transport::w1_lower(rho, rho0)},
                                       {"bloch", bloch_json(rho)}},
                                      ""};
                      }});

  // stability
  std::string algorithm = "lindblad";
  int instances = 5, layers = 2;
  std::vector<double> times{0.5, 1.0, 2.0};
  std::vector<double> betas{1.0, 1.25, 1.5, 2.0};
  double max_separation = 0.5;
  CLI::App* stability = command(&app, "stability", "Temperature-stability check on random instances");
  stability->add_option("--algorithm", algorithm, "Algorithm family")->check(CLI::IsMember({"lindblad", "shallow"}));
  stability->add_option("--n", n, "Qubits")->check(CLI::Range(1, 6));
  stability->add_option("--instances", instances, "Random instances")->check(CLI::PositiveNumber);
  stability->add_option("--layers", layers, "Shallow circuit rounds")->check(CLI::PositiveNumber);
  stability->add_option("--t", times, "Evolution times (lindblad)");
  stability->add_option("--betas", betas, "Inverse temperatures");
  stability->add_option("--max-separation", max_separation, "Largest |beta - beta'| compared");
  commands.push_back({stability, [&] {
                        CounterRng rng = CounterRng::from_seed(seed);
                        json reports = json::array();
                        bool all = true;
                        for (int i = 0; i < instances; ++i) {
                          if (algorithm == "lindblad") {
                            const auto spec = exactq::random_lindblad(n, rng);
                            const auto rho0 = random_density(n, rng);
                            for (double time : times) {
                              const auto r = exactq::lindblad_stability(spec, rho0, time, betas, max_separation);
                              all = all && r.all_pass();
                              json j = exactq::to_json(r);
                              j["instance"] = i;
                              j["t"] = time;
                              reports.push_back(j);
                            }
                          } else {
                            const auto spec = exactq::random_shallow(n, layers, rng);
                            std::vector<double> theta(static_cast<std::size_t>(spec.parameter_count()));
                            for (double& th : theta) th = 2.0 * rng.uniform() - 1.0;
                            const auto r = exactq::shallow_stability(spec, theta, betas, max_separation);
                            all = all && r.all_pass();
                            json j = exactq::to_json(r);
                            j["instance"] = i;
                            reports.push_back(j);
                          }
                          if (verbose) std::cerr << "instance " << i << " done\n";
                        }
                        return Output{{{"all_pass", all}, {"reports", reports}}, ""};
                      }});

  // transport
  std::string rho_path, sigma_path;
  bool exact = false;
  CLI::App* transport_cmd = command(&app, "transport", "Quantum Wasserstein distances");
  transport_cmd->require_subcommand(1);
  CLI::App* w1 = command(transport_cmd, "w1", "W1 bracket between two states");
  w1->add_option("--rho", rho_path, "First state JSON")->required();
  w1->add_option("--sigma", sigma_path, "Second state JSON")->required();
  w1->add_flag("--exact", exact, "Solve the exact transport problem (n <= 3)");
  commands.push_back({w1, [&] {
                        const auto rho = state_from_json(read_json(rho_path));
                        const auto sigma = state_from_json(read_json(sigma_path));
                        const auto b = transport::w1_bracket(rho, sigma, exact);
                        json r = {{"lower", b.lower},
                                  {"upper", b.upper},
                                  {"lower_method", b.lower_method},
                                  {"upper_method", b.upper_method},
                                  {"trace_distance", trace_distance(rho, sigma)},
                                  {"pauli_sq_dist", transport::pauli_sq_dist(rho, sigma)}};
                        if (exact) r["value"] = b.upper;
                        return Output{r, ""};
                      }});

  // glass
  CLI::App* glass_cmd = command(&app, "glass", "Cluster decompositions of Gibbs states");
  glass_cmd->require_subcommand(1);
  bool classical = false;
  double q = 1.0, eps = 0.0, depolarize = 0.1;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  double beta_min = 0.5, beta_max = 5.0, beta_step = 0.5;
  CLI::App* glass_scan = command(glass_cmd, "scan", "Clusters of random Gibbs states across beta");
  glass_scan->add_option("--n", n, "Qubits")->check(CLI::Range(1, 10));
  glass_scan->add_option("--p", p, "Locality")->check(CLI::PositiveNumber);
  glass_scan->add_option("--J", J, "Coupling scale");
  glass_scan->add_flag("--classical", classical, "Z-only p-spin instances");
  glass_scan->add_option("--q", q, "Separation threshold per qubit");
  glass_scan->add_option("--seeds", seeds, "Instance seeds");
  glass_scan->add_option("--beta-min", beta_min, "Smallest beta");
  glass_scan->add_option("--beta-max", beta_max, "Largest beta");
  glass_scan->add_option("--beta-step", beta_step, "Beta step");
  commands.push_back({glass_scan, [&] {
                        glass::ScanConfig c;
                        c.n = n;
                        c.p = p;
                        c.J = J;
                        c.classical = classical;
                        c.q = q;
                        c.seeds = seeds;
                        c.betas = grid(beta_min, beta_max, beta_step);
                        const auto rows = glass::transition_scan(c);
                        return Output{glass::scan_json(rows), glass::scan_csv(rows)};
                      }});
  CLI::App* glass_detect = command(glass_cmd, "detect", "Detect clusters of one Gibbs state");
  glass_detect->add_option("--n", n, "Qubits")->check(CLI::Range(1, 10));
  glass_detect->add_option("--p", p, "Locality")->check(CLI::PositiveNumber);
  glass_detect->add_option("--J", J, "Coupling scale");
  glass_detect->add_option("--beta", beta, "Inverse temperature");
  glass_detect->add_flag("--classical", classical, "Z-only p-spin instance");
  glass_detect->add_option("--q", q, "Separation threshold per qubit");
  commands.push_back({glass_detect, [&] {
                        const auto h = classical ? glass::classical_pspin(n, p, J, seed) : pauli::sample_ensemble(n, p, J, seed);
                        const auto rho = exactq::gibbs_state(h, beta).state;
                        const auto d = glass::detect_clusters(rho, q);
                        json clusters = json::array();
                        for (const auto& c : d.clusters) clusters.push_back({{"weight", c.weight}, {"bloch", bloch_json(c.state)}});
                        return Output{{{"M", d.M()},
                                       {"eps_achieved", d.eps_achieved},
                                       {"q_achieved", std::isfinite(d.q_achieved) ? json(d.q_achieved) : json(nullptr)},
                                       {"ratio", d.ratio},
                                       {"clusters", clusters}},
                                      ""};
                      }});
  CLI::App* glass_preserve = command(glass_cmd, "preserve", "Push the two-cluster fixture through depolarizing noise");
  glass_preserve->add_option("--n", n, "Qubits")->check(CLI::Range(1, 10));
  glass_preserve->add_option("--q", q, "Separation threshold per qubit");
  glass_preserve->add_option("--eps", eps, "Trace error allowance");
  glass_preserve->add_option("--depolarize", depolarize, "Depolarizing probability on qubit 0")->check(CLI::Range(0.0, 1.0));
  commands.push_back({glass_preserve, [&] {
                        DensityState rho = DensityState::maximally_mixed(n);
                        const auto cand = glass::two_cluster_fixture(n, &rho);
                        const double pr = depolarize;
                        const transport::Channel channel = [pr](const DensityState& s) {
                          Matrix m = (1.0 - 0.75 * pr) * s.matrix();
                          for (char letter : {'X', 'Y', 'Z'}) {
                            const Matrix P = pauli::to_dense(pauli::PauliString::single(0, letter), s.n());
                            m += 0.25 * pr * P * s.matrix() * P;
                          }
                          return DensityState::from_trusted(s.n(), m);
                        };
                        const auto r = glass::channel_preservation_check(rho, cand, channel, eps, q,
                                                                         glass::local_channel_wc_budget(1, pr));
                        return Output{{{"status", glass::to_string(r.status)},
                                       {"budget", r.budget},
                                       {"budget_cap", r.budget_cap},
                                       {"budget_certified", r.budget_certified},
                                       {"wc_lower", r.wc_lower},
                                       {"image_q", r.image_q},
                                       {"image_eps", r.image_eps},
                                       {"image_pass", r.image_pass},
                                       {"triangle_bound", r.triangle_bound}},
                                      ""};
                      }});

  // replica
  CLI::App* replica_cmd = command(&app, "replica", "Replica saddle-point solvers");
  replica_cmd->require_subcommand(1);
  double betaJ = 6.0, q0_init = 1.0, q0_seed = 0.5, q1 = 0.6;
  replica::RsSolverConfig rs;
  std::string init_path, kernel_path;
  auto solver_options = [&](CLI::App* sub) {
    sub->add_option("--p", p, "Interaction order")->check(CLI::Range(3, 64));
    sub->add_option("--J", J, "Coupling scale");
    sub->add_option("--ntau", rs.n_tau, "Imaginary-time slices");
    sub->add_option("--nz", rs.n_z, "Static field samples");
    sub->add_option("--nxi", rs.n_xi, "Dynamic field samples per site");
    sub->add_option("--mixing", rs.mixing, "Damping of the fixed-point update");
    sub->add_option("--tol", rs.tolerance, "Convergence tolerance");
    sub->add_option("--max-iters", rs.max_iters, "Iteration cap");
  };
  CLI::App* rs_solve = command(replica_cmd, "rs-solve", "Replica-symmetric fixed point at one temperature");
  solver_options(rs_solve);
  rs_solve->add_option("--betaJ", betaJ, "Inverse temperature times J");
  rs_solve->add_option("--q0-init", q0_init, "Starting overlap");
  rs_solve->add_option("--init", init_path, "Starting kernel JSON");
  commands.push_back({rs_solve, [&] {
                        rs.seed = seed;
                        rs.threads = threads;
                        rs.q0_init = q0_init;
                        if (!init_path.empty()) rs.init = replica::kernel_from_json(read_json(init_path));
                        const auto r = replica::rs_solve(betaJ / J, J, p, rs);
                        return Output{{{"q0", r.kernel.q0},
                                       {"q0_stderr", r.q0_stderr},
                                       {"converged", r.converged},
                                       {"oscillating", r.oscillating},
                                       {"iterations", r.iterations},
                                       {"residual", r.residual},
                                       {"clipped_fraction", r.clipped_fraction},
                                       {"q0_history", r.q0_history},
                                       {"kernel", replica::to_json(r.kernel)}},
                                      ""};
                      }});
  CLI::App* rs_scan = command(replica_cmd, "scan", "Replica-symmetric overlap across temperatures by continuation");
  solver_options(rs_scan);
  double scan_min = 1.0, scan_max = 10.0, scan_step = 0.5;
  rs_scan->add_option("--betaJ-min", scan_min, "Smallest betaJ");
  rs_scan->add_option("--betaJ-max", scan_max, "Largest betaJ");
  rs_scan->add_option("--betaJ-step", scan_step, "Step");
  rs_scan->add_option("--q0-seed", q0_seed, "Overlap floor for each starting point");
  commands.push_back({rs_scan, [&] {
                        rs.seed = seed;
                        rs.threads = threads;
                        std::vector<double> bs;
                        for (double x : grid(scan_min, scan_max, scan_step)) bs.push_back(x / J);
                        const auto points = replica::rs_scan(bs, J, p, rs, q0_seed);
                        json rows = json::array();
                        CsvRows csv_rows;
                        for (const auto& pt : points) {
                          json row = {{"betaJ", pt.beta * J}, {"ok", pt.ok}};
                          if (pt.ok) {
                            row["q0"] = pt.report.kernel.q0;
                            row["q0_stderr"] = pt.report.q0_stderr;
                            row["converged"] = pt.report.converged;
                            row["oscillating"] = pt.report.oscillating;
                            row["iterations"] = pt.report.iterations;
                            row["G_half"] = pt.report.kernel.G[pt.report.kernel.G.size() / 2];
                            csv_rows.push_back({{std::to_string(pt.beta * J)},
                                                {{"q0", pt.report.kernel.q0},
                                                 {"q0_stderr", pt.report.q0_stderr},
                                                 {"converged", pt.report.converged ? 1.0 : 0.0}}});
                          } else {
                            row["error"] = pt.error;
                          }
                          rows.push_back(row);
                          if (verbose) std::cerr << row.dump() << '\n';
                        }
                        const double cross = replica::scan_crossover(points);
                        return Output{{{"rows", rows}, {"crossover_betaJ", std::isfinite(cross) ? json(cross * J) : json(nullptr)}},
                                      long_csv({"betaJ"}, csv_rows)};
                      }});
  CLI::App* tap = command(replica_cmd, "tap", "TAP complexity at m = 1");
  tap->add_option("--p", p, "Interaction order")->check(CLI::Range(3, 64));
  tap->add_option("--J", J, "Coupling scale");
  tap->add_option("--betaJ", betaJ, "Inverse temperature times J (Liouville kernel)");
  tap->add_option("--kernel", kernel_path, "Kernel JSON instead of the Liouville profile");
  tap->add_option("--q1", q1, "Inner overlap");
  tap->add_option("--ntau", rs.n_tau, "Imaginary-time slices");
  tap->add_option("--nz", rs.n_z, "Static field samples");
  tap->add_option("--nxi", rs.n_xi, "Dynamic field samples per site");
  commands.push_back({tap, [&] {
                        const auto k = kernel_path.empty() ? replica::liouville_init(betaJ / J, J, p, rs.n_tau)
                                                           : replica::kernel_from_json(read_json(kernel_path));
                        replica::TapConfig c;
                        c.n_z = rs.n_z;
                        c.n_xi = rs.n_xi;
                        c.seed = seed;
                        c.threads = threads;
                        const auto r = replica::tap_complexity(k, q1, c);
                        json out = {{"S", r.S},
                                    {"stderr", r.stderr_S},
                                    {"energy_term", r.energy_term},
                                    {"kl", r.kl},
                                    {"low_precision", r.low_precision}};
                        const double lambda = analytic::lsi_lambda(k.beta * k.J, q1, k.p);
                        out["lsi_S_lower"] = lambda > 0.0 ? json(analytic::lsi_S_lower(k.beta * k.J, q1, k.p)) : json(nullptr);
                        return Output{out, ""};
                      }});

  // analytic
  CLI::App* analytic_cmd = command(&app, "analytic", "Closed-form estimates");
  analytic_cmd->require_subcommand(1);
  double q0 = 0.6;
  int pmax = 16;
  CLI::App* transition = command(analytic_cmd, "transition", "Marginal-stability transition estimate");
  transition->add_option("--p", p, "Interaction order");
  transition->add_option("--q0", q0, "Overlap");
  commands.push_back({transition, [&] { return Output{analytic::to_json(analytic::transition_report(p, q0)), ""}; }});
  CLI::App* lsi = command(analytic_cmd, "lsi", "Log-Sobolev lower bounds on the TAP complexity");
  lsi->add_option("--betaJ", betaJ, "Inverse temperature times J");
  lsi->add_option("--q1", q1, "Inner overlap");
  lsi->add_option("--pmax", pmax, "Largest p in the table");
  commands.push_back({lsi, [&] {
                        CsvRows csv_rows;
                        for (const auto& row : analytic::lsi_table(betaJ, q1, pmax))
                          csv_rows.push_back({{std::to_string(row.p)},
                                              {{"lambda", row.lambda}, {"S_lower", row.S_lower}, {"gaussian_S_lower", row.gaussian_S_lower}}});
                        return Output{analytic::lsi_json(betaJ, q1, pmax), long_csv({"p"}, csv_rows)};
                      }});
  CLI::App* variational = command(analytic_cmd, "variational", "Variational free-energy bound");
  variational->add_option("--betaJ", betaJ, "Inverse temperature times J");
  variational->add_option("--p", p, "Interaction order")->check(CLI::Range(2, 64));
  commands.push_back({variational, [&] {
                        const auto m = analytic::minimize_free_energy(betaJ, p);
                        json r = {{"G_numeric", m.G}, {"F_numeric", m.F}};
                        if (p == 3) {
                          r["g_opt"] = analytic::g_opt(betaJ);
                          r["F_at_g_opt"] = analytic::variational_free_energy(analytic::g_opt(betaJ), betaJ, 3);
                        }
                        return Output{r, ""};
                      }});

  // replay
  std::string artifact_path;
  CLI::App* replay = command(&app, "replay", "Re-run the command recorded in an artifact");
  replay->add_option("artifact", artifact_path, "Artifact JSON")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kUsageExit;
  }

  if (replay->parsed()) {
    const json artifact = read_json(artifact_path);
    std::vector<std::string> recorded = artifact.at("argv").get<std::vector<std::string>>();
    if (!out_path.empty()) {
      recorded.push_back("--out");
      recorded.push_back(out_path);
    }
    return run(recorded);
  }

  for (auto& [sub, handler] : commands) {
    if (!sub->parsed()) continue;
    std::string name = sub->get_name();
    for (const CLI::App* parent = sub->get_parent(); parent && parent->get_parent(); parent = parent->get_parent())
      name = parent->get_name() + " " + name;
    const auto start = std::chrono::steady_clock::now();
    const Output out = handler();
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::string text;
    if (format == "csv") {
      if (out.csv.empty()) throw DomainError("command '" + name + "' has no CSV output");
      text = out.csv;
    } else {
      json config = resolved_config(&app);
      config.erase("out");
      for (const CLI::App* s = sub; s != &app; s = s->get_parent()) config.update(resolved_config(s));
      std::vector<std::string> argv_record;
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--out") {
          ++i;
          continue;
        }
        if (args[i].rfind("--out=", 0) == 0) continue;
        argv_record.push_back(args[i]);
      }
      const json artifact = {{"schema", "glasslab.artifact"},
                             {"version", 1},
                             {"glasslab_version", kVersion},
                             {"command", name},
                             {"seed", seed},
                             {"config", config},
                             {"argv", argv_record},
                             {"wall_time_s", wall},
                             {"result", out.result}};
      text = artifact.dump(2) + "\n";
    }
    if (out_path.empty()) {
      std::cout << text;
    } else {
      std::ofstream file(out_path);
      if (!file) throw DomainError("cannot write " + out_path);
      file << text;
      if (verbose) std::cerr << "wrote " << out_path << '\n';
    }
    return 0;
  }
  std::cerr << app.help();
  return kUsageExit;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(args);
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "invalid JSON input: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
