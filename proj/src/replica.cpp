#include "glasslab/replica.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <thread>

#include <fftw3.h>

namespace glasslab::replica {

namespace {

using Mat2 = Eigen::Matrix2cd;

constexpr std::uint64_t kZStream = 0x7a2d6669656c64ULL;
constexpr std::uint64_t kXiStream = 0x78692d7061746873ULL;

double int_pow(double x, int k) {
  double r = 1.0;
  for (int i = 0; i < k; ++i) r *= x;
  return r;
}

// Scratch buffers for one propagation.
struct Workspace {
  std::vector<Mat2> prefix;
  std::vector<Mat2> suffix;
  explicit Workspace(int n) : prefix(static_cast<std::size_t>(n + 1)), suffix(static_cast<std::size_t>(n + 1)) {}
};

// Weighted accumulation of per-sample traces with a running log scale.
struct Accumulator {
  double log_scale = -std::numeric_limits<double>::infinity();
  double weight = 0.0;
  std::array<double, 3> one{};
  std::array<double, 3> first{};
  std::array<double, 3> second{};
  double weight_first = 0.0;
  double weight_second = 0.0;
  double abs_first = 0.0;
  double abs_second = 0.0;
  std::vector<double> two;
  long samples = 0;
  long negative = 0;
  double max_abs_a = 0.0;

  explicit Accumulator(int n) : two(static_cast<std::size_t>(n), 0.0) {}

  void rescale(double new_scale) {
    if (new_scale <= log_scale) return;
    const double f = std::isfinite(log_scale) ? std::exp(log_scale - new_scale) : 0.0;
    weight *= f;
    weight_first *= f;
    weight_second *= f;
    abs_first *= f;
    abs_second *= f;
    for (int nu = 0; nu < 3; ++nu) {
      one[nu] *= f;
      first[nu] *= f;
      second[nu] *= f;
    }
    for (double& v : two) v *= f;
    log_scale = new_scale;
  }
};

// Propagates one xi realization at field offset z and adds its traces to `acc`.
// Slice k carries exp(dtau h_k . sigma) = e^{x} [(1 + e^{-2x})/2 I + (1 - e^{-2x})/2 h^ . sigma], x = dtau |h_k|;
// the e^{x} factors are kept in log form.
void propagate(const double* hx, const double* hy, const double* hz, const std::array<double, 3>& z, double dtau,
               int n, bool first_half, Workspace& ws, Accumulator& acc, double log_weight = 0.0) {
  double log_factor = log_weight;
  ws.prefix[0].setIdentity();
  for (int k = 0; k < n; ++k) {
    const double fx = z[0] + hx[k], fy = z[1] + hy[k], fz = z[2] + hz[k];
    const double mag = std::sqrt(fx * fx + fy * fy + fz * fz);
    const double x = dtau * mag;
    log_factor += x;
    const double e = std::exp(-2.0 * x);
    const double c = 0.5 * (1.0 + e);
    const double s = mag > 0.0 ? -0.5 * std::expm1(-2.0 * x) / mag : 0.0;
    Mat2 m;
    m(0, 0) = Complex(c + s * fz, 0.0);
    m(1, 1) = Complex(c - s * fz, 0.0);
    m(0, 1) = Complex(s * fx, -s * fy);
    m(1, 0) = Complex(s * fx, s * fy);
    ws.prefix[static_cast<std::size_t>(k + 1)] = m * ws.prefix[static_cast<std::size_t>(k)];
    ws.suffix[static_cast<std::size_t>(k)] = m;
  }
  // suffix[k] = M_{n-1} ... M_k
  ws.suffix[static_cast<std::size_t>(n)].setIdentity();
  for (int k = n - 2; k >= 0; --k)
    ws.suffix[static_cast<std::size_t>(k)] = ws.suffix[static_cast<std::size_t>(k + 1)] * ws.suffix[static_cast<std::size_t>(k)];

  const Complex tr_u = ws.prefix[static_cast<std::size_t>(n)].trace();
  const double trace = tr_u.real();
  std::array<double, 3> one{};
  for (int k = 0; k < n; ++k) {
    const Mat2 a = ws.prefix[static_cast<std::size_t>(k)] * ws.suffix[static_cast<std::size_t>(k)];
    one[0] += (a(0, 1) + a(1, 0)).real();
    one[1] += (Complex(0.0, 1.0) * (a(0, 1) - a(1, 0))).real();
    one[2] += (a(0, 0) - a(1, 1)).real();
  }
  for (double& v : one) v /= n;

  acc.rescale(log_factor);
  const double f = std::exp(log_factor - acc.log_scale);
  acc.weight += f * trace;
  (first_half ? acc.weight_first : acc.weight_second) += f * trace;
  (first_half ? acc.abs_first : acc.abs_second) += f * std::abs(trace);
  for (int nu = 0; nu < 3; ++nu) {
    acc.one[static_cast<std::size_t>(nu)] += f * one[static_cast<std::size_t>(nu)];
    (first_half ? acc.first : acc.second)[static_cast<std::size_t>(nu)] += f * one[static_cast<std::size_t>(nu)];
    if (trace > 0.0) acc.max_abs_a = std::max(acc.max_abs_a, std::abs(one[static_cast<std::size_t>(nu)]) / trace);
  }
  // sum_nu sigma_nu A sigma_nu = 2 Tr(A) I - A
  for (int k = 0; k < n; ++k) {
    const Complex g = 2.0 * ws.prefix[static_cast<std::size_t>(k)].trace() * ws.suffix[static_cast<std::size_t>(k)].trace() - tr_u;
    acc.two[static_cast<std::size_t>(k)] += f * g.real();
  }
  ++acc.samples;
  if (trace <= 0.0) ++acc.negative;
}

SingleSiteEstimate finish(const Accumulator& acc) {
  if (!(acc.weight > 0.0) || !(acc.weight_first > 0.0) || !(acc.weight_second > 0.0))
    throw NumericalError("non-positive Monte Carlo estimate of zeta (sign problem)");
  SingleSiteEstimate out;
  out.log_zeta = acc.log_scale + std::log(acc.weight / static_cast<double>(acc.samples));
  for (std::size_t nu = 0; nu < 3; ++nu) {
    out.a[nu] = acc.one[nu] / acc.weight;
    out.a_first[nu] = acc.first[nu] / acc.weight_first;
    out.a_second[nu] = acc.second[nu] / acc.weight_second;
  }
  const std::size_t n = acc.two.size();
  out.G.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t mirror = (n - k) % n;
    out.G[k] = 0.5 * (acc.two[k] + acc.two[mirror]) / acc.weight;
  }
  out.negative_weight_fraction = static_cast<double>(acc.negative) / static_cast<double>(acc.samples);
  out.max_abs_a_sample = acc.max_abs_a;
  return out;
}

double log_sinhc(double x) {
  // log(sinh(x) / x) for x >= 0
  if (x < 1e-4) return x * x / 6.0;
  return x + std::log1p(-std::exp(-2.0 * x)) - std::log(2.0 * x);
}

// Importance sampler for the time-constant part xi0 ~ N(0, v I) of the field at offset z.
// Proposal: direction e from the von Mises-Fisher law with mean z^ and concentration beta|z|,
// then xi0 ~ N(beta v e, v I). Its density is N(xi0; 0, v) sinh(beta|z + xi0|)/(beta|z + xi0|) / C
// with C = exp(beta^2 v / 2) sinh(beta|z|)/(beta|z|), which flattens the cosh(beta|b|) growth of
// the trace in the static field b = z + xi0.
struct StaticTilt {
  double beta;
  double v;
  std::array<double, 3> z;
  double log_norm;

  StaticTilt(double beta_, double v_, const std::array<double, 3>& z_) : beta(beta_), v(v_), z(z_) {
    log_norm = v > 0.0 ? 0.5 * beta * beta * v + log_sinhc(beta * norm(z)) : 0.0;
  }

  static double norm(const std::array<double, 3>& a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }

  // Draws xi0 and returns log(target / proposal).
  double draw(CounterRng& rng, std::array<double, 3>& xi0) const {
    if (v <= 0.0) {
      xi0 = {0.0, 0.0, 0.0};
      return 0.0;
    }
    const double zn = norm(z);
    const double kappa = beta * zn;
    const double u = rng.uniform();
    double w;
    if (kappa < 1e-8) {
      w = 2.0 * u - 1.0;
    } else {
      w = 1.0 + std::log(u + (1.0 - u) * std::exp(-2.0 * kappa)) / kappa;
      w = std::clamp(w, -1.0, 1.0);
    }
    std::array<double, 3> axis = kappa < 1e-8 ? std::array<double, 3>{0.0, 0.0, 1.0}
                                              : std::array<double, 3>{z[0] / zn, z[1] / zn, z[2] / zn};
    // orthonormal frame around axis
    std::array<double, 3> helper = std::abs(axis[0]) < 0.9 ? std::array<double, 3>{1.0, 0.0, 0.0}
                                                           : std::array<double, 3>{0.0, 1.0, 0.0};
    std::array<double, 3> e1{axis[1] * helper[2] - axis[2] * helper[1], axis[2] * helper[0] - axis[0] * helper[2],
                             axis[0] * helper[1] - axis[1] * helper[0]};
    const double n1 = norm(e1);
    for (double& c : e1) c /= n1;
    const std::array<double, 3> e2{axis[1] * e1[2] - axis[2] * e1[1], axis[2] * e1[0] - axis[0] * e1[2],
                                   axis[0] * e1[1] - axis[1] * e1[0]};
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double r = std::sqrt(std::max(0.0, 1.0 - w * w));
    const double sd = std::sqrt(v);
    std::array<double, 3> b{};
    for (std::size_t i = 0; i < 3; ++i) {
      const double e = w * axis[i] + r * (std::cos(phi) * e1[i] + std::sin(phi) * e2[i]);
      xi0[i] = beta * v * e + sd * rng.gaussian();
      b[i] = z[i] + xi0[i];
    }
    return log_norm - log_sinhc(beta * norm(b));
  }
};

std::array<double, 3> draw_z(std::uint64_t seed, int index, double variance) {
  CounterRng rng = CounterRng::from_seed(seed).derive(kZStream).derive(static_cast<std::uint64_t>(index));
  const double sd = std::sqrt(std::max(variance, 0.0));
  std::array<double, 3> z{};
  for (double& v : z) v = sd * rng.gaussian();
  return z;
}

// Both halves need an average sign of at least kMinSign for the ratio estimators to be trusted.
constexpr double kMinSign = 0.5;

bool weights_reliable(const Accumulator& acc) {
  return acc.weight_first >= kMinSign * acc.abs_first && acc.weight_second >= kMinSign * acc.abs_second &&
         acc.weight_first > 0.0 && acc.weight_second > 0.0;
}

// Runs n_xi samples for one z using the xi stream `stream`. Even and odd samples form the two halves.
// If either half has a poor average sign the stream is extended, doubling the sample count up to kMaxExtension times.
constexpr int kMaxExtension = 64;

SingleSiteEstimate run_site(const ImaginaryTimeKernel& kernel, const std::array<double, 3>& z, PathSampler& sampler,
                            CounterRng stream, int n_xi, Workspace& ws) {
  const int n = kernel.n_tau();
  Accumulator acc(n);
  std::vector<double> paths(static_cast<std::size_t>(6 * n));
  const StaticTilt tilt(kernel.beta, sampler.static_variance(), z);
  int pair = 0;
  int pairs = (n_xi + 1) / 2;
  for (;;) {
    for (; pair < pairs; ++pair) {
      CounterRng rng = stream.derive(static_cast<std::uint64_t>(pair));
      for (int mu = 0; mu < 3; ++mu)
        sampler.sample_pair(rng, paths.data() + mu * n, paths.data() + (3 + mu) * n);
      for (int half = 0; half < 2; ++half) {
        std::array<double, 3> xi0{};
        const double log_w = tilt.draw(rng, xi0);
        const std::array<double, 3> offset{z[0] + xi0[0], z[1] + xi0[1], z[2] + xi0[2]};
        const double* base = paths.data() + 3 * half * n;
        propagate(base, base + n, base + 2 * n, offset, kernel.dtau(), n, half == 0, ws, acc, log_w);
      }
    }
    if (weights_reliable(acc) || pairs >= kMaxExtension * ((n_xi + 1) / 2)) break;
    pairs *= 2;
  }
  return finish(acc);
}

std::vector<double> xi_covariance(const ImaginaryTimeKernel& kernel, double offset) {
  std::vector<double> c(kernel.Sigma.size());
  for (std::size_t k = 0; k < c.size(); ++k) c[k] = kernel.Sigma[k] - offset;
  return c;
}

// Evaluates `work(i, sampler, ws)` for i in [0, count) on up to `threads` workers, each with its own sampler.
template <typename Work>
void parallel_sites(int count, int threads, const std::vector<double>& covariance, int n, Work work) {
  threads = std::max(1, std::min(threads, count));
  std::vector<std::unique_ptr<PathSampler>> samplers;
  for (int t = 0; t < threads; ++t) samplers.push_back(std::make_unique<PathSampler>(covariance, false));
  auto body = [&](int t) {
    Workspace ws(n);
    for (int i = t; i < count; i += threads) work(i, *samplers[static_cast<std::size_t>(t)], ws);
  };
  if (threads == 1) {
    body(0);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(body, t);
  for (auto& th : pool) th.join();
}

}  // namespace

void ImaginaryTimeKernel::refresh() {
  Sigma.resize(G.size());
  for (std::size_t k = 0; k < G.size(); ++k) Sigma[k] = J * J * int_pow(G[k], p - 1);
  q0_hat = J * J * int_pow(q0, p - 1);
}

double ImaginaryTimeKernel::asymmetry() const {
  double worst = 0.0;
  const std::size_t n = G.size();
  for (std::size_t k = 1; k < n; ++k) worst = std::max(worst, std::abs(G[k] - G[n - k]));
  return worst;
}

ImaginaryTimeKernel kernel_with_sigma(double beta, std::vector<double> sigma, double q0_hat) {
  require(beta > 0.0 && std::isfinite(beta), "beta must be positive");
  require(!sigma.empty(), "empty covariance");
  ImaginaryTimeKernel k;
  k.beta = beta;
  k.G.assign(sigma.size(), 3.0);
  k.Sigma = std::move(sigma);
  k.q0_hat = q0_hat;
  return k;
}

double liouville_b(int p) {
  require(p > 2, "Liouville profile needs p > 2");
  return (1.0 / std::numbers::pi) * (0.5 - 1.0 / p) * std::tan(std::numbers::pi / p);
}

ImaginaryTimeKernel liouville_init(double beta, double J, int p, int n_tau) {
  require(p >= 3, "Liouville initialization needs p >= 3");
  require(beta > 0.0 && std::isfinite(beta), "beta must be positive");
  require(J > 0.0, "J must be positive");
  require(n_tau >= 4 && n_tau % 2 == 0, "n_tau must be even and at least 4");
  const double b = liouville_b(p);
  ImaginaryTimeKernel k;
  k.beta = beta;
  k.J = J;
  k.p = p;
  k.G.resize(static_cast<std::size_t>(n_tau));
  const double dtau = beta / n_tau;
  auto profile = [&](double tau) {
    return b * std::pow(std::numbers::pi / (beta * std::sin(std::numbers::pi * tau / beta)), 2.0 / p);
  };
  for (int i = 0; i < n_tau; ++i) {
    const double tau = i == 0 ? 0.5 * dtau : i * dtau;
    k.G[static_cast<std::size_t>(i)] = std::min(profile(tau), 3.0);
  }
  k.G[0] = 3.0;
  // exact mirror symmetry on the grid
  for (int i = 1; i < n_tau / 2; ++i) {
    const double avg = 0.5 * (k.G[static_cast<std::size_t>(i)] + k.G[static_cast<std::size_t>(n_tau - i)]);
    k.G[static_cast<std::size_t>(i)] = k.G[static_cast<std::size_t>(n_tau - i)] = avg;
  }
  k.q0 = 0.0;
  k.refresh();
  return k;
}

PathSampler::PathSampler(const std::vector<double>& covariance, bool include_static)
    : n_(static_cast<int>(covariance.size())) {
  require(n_ >= 2, "path grid too small");
  amplitude_.resize(static_cast<std::size_t>(n_));
  double total = 0.0, negative = 0.0;
  for (int j = 0; j < n_; ++j) {
    double lambda = 0.0;
    for (int k = 0; k < n_; ++k)
      lambda += covariance[static_cast<std::size_t>(k)] * std::cos(2.0 * std::numbers::pi * j * k / n_);
    total += std::abs(lambda);
    if (lambda < 0.0) {
      negative += -lambda;
      lambda = 0.0;
    }
    amplitude_[static_cast<std::size_t>(j)] = std::sqrt(lambda / n_);
  }
  clipped_ = total > 0.0 ? negative / total : 0.0;
  if (!include_static) {
    static_variance_ = amplitude_[0] * amplitude_[0];
    amplitude_[0] = 0.0;
  }
  in_ = fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n_));
  out_ = fftw_malloc(sizeof(fftw_complex) * static_cast<std::size_t>(n_));
  plan_ = fftw_plan_dft_1d(n_, static_cast<fftw_complex*>(in_), static_cast<fftw_complex*>(out_), FFTW_BACKWARD,
                           FFTW_ESTIMATE);
  if (!plan_) throw NumericalError("FFT plan creation failed");
}

PathSampler::~PathSampler() {
  if (plan_) fftw_destroy_plan(static_cast<fftw_plan>(plan_));
  fftw_free(in_);
  fftw_free(out_);
}

void PathSampler::sample_pair(CounterRng& rng, double* first, double* second) {
  auto* in = static_cast<fftw_complex*>(in_);
  auto* out = static_cast<fftw_complex*>(out_);
  for (int j = 0; j < n_; ++j) {
    const double a = amplitude_[static_cast<std::size_t>(j)];
    in[j][0] = a * rng.gaussian();
    in[j][1] = a * rng.gaussian();
  }
  fftw_execute(static_cast<fftw_plan>(plan_));
  for (int k = 0; k < n_; ++k) {
    first[k] = out[k][0];
    second[k] = out[k][1];
  }
}

SingleSiteEstimate single_site_correlators(const ImaginaryTimeKernel& kernel, const std::array<double, 3>& z,
                                           const std::vector<XiPath>& xi_paths) {
  const int n = kernel.n_tau();
  require(n >= 2, "kernel grid too small");
  require(!xi_paths.empty(), "no xi samples");
  Workspace ws(n);
  Accumulator acc(n);
  const std::size_t half = xi_paths.size() / 2;
  for (std::size_t s = 0; s < xi_paths.size(); ++s) {
    const XiPath& path = xi_paths[s];
    for (const auto& comp : path) require(static_cast<int>(comp.size()) == n, "xi path length differs from the grid");
    propagate(path[0].data(), path[1].data(), path[2].data(), z, kernel.dtau(), n, s < half || xi_paths.size() == 1, ws,
              acc);
  }
  if (xi_paths.size() == 1) {
    acc.weight_second = acc.weight_first;
    acc.second = acc.first;
  }
  return finish(acc);
}

void RsSolverConfig::validate() const {
  require(n_tau >= 4 && n_tau % 2 == 0, "n_tau must be even and at least 4");
  require(n_z >= 2, "n_z must be at least 2");
  require(n_xi >= 2, "n_xi must be at least 2");
  require(mixing > 0.0 && mixing <= 1.0, "mixing must lie in (0, 1]");
  require(tolerance > 0.0, "tolerance must be positive");
  require(max_iters >= 1, "max_iters must be positive");
  require(q0_init >= 0.0 && q0_init <= 3.0, "q0_init must lie in [0, 3]");
  require(threads >= 1, "threads must be positive");
}

RsIterateDiagnostics rs_map(const ImaginaryTimeKernel& kernel, const RsSolverConfig& config) {
  config.validate();
  const int n = kernel.n_tau();
  const std::vector<double> cov = xi_covariance(kernel, kernel.q0_hat);
  std::vector<SingleSiteEstimate> sites(static_cast<std::size_t>(config.n_z));
  double clipped = 0.0;
  {
    PathSampler probe(cov);
    clipped = probe.clipped_fraction();
  }
  if (clipped > config.clip_budget)
    throw NumericalError("xi covariance lost positivity: clipped spectral fraction " + std::to_string(clipped));

  parallel_sites(config.n_z, config.threads, cov, n, [&](int i, PathSampler& sampler, Workspace& ws) {
    const auto z = draw_z(config.seed, i, kernel.q0_hat);
    const CounterRng stream = CounterRng::from_seed(config.seed).derive(kXiStream).derive(static_cast<std::uint64_t>(i));
    sites[static_cast<std::size_t>(i)] = run_site(kernel, z, sampler, stream, config.n_xi, ws);
  });

  RsIterateDiagnostics d;
  d.clipped_fraction = clipped;
  d.G_new.assign(static_cast<std::size_t>(n), 0.0);
  std::vector<double> g_sq(static_cast<std::size_t>(n), 0.0);
  double q_sum = 0.0, q_sq = 0.0;
  for (const auto& site : sites) {
    for (int k = 0; k < n; ++k) {
      d.G_new[static_cast<std::size_t>(k)] += site.G[static_cast<std::size_t>(k)];
      g_sq[static_cast<std::size_t>(k)] += site.G[static_cast<std::size_t>(k)] * site.G[static_cast<std::size_t>(k)];
    }
    double q = 0.0;
    for (std::size_t nu = 0; nu < 3; ++nu) q += site.a_first[nu] * site.a_second[nu];
    q_sum += q;
    q_sq += q * q;
    d.negative_weight_fraction += site.negative_weight_fraction;
    d.max_abs_a = std::max(d.max_abs_a, site.max_abs_a_sample);
  }
  const double nz = config.n_z;
  for (int k = 0; k < n; ++k) {
    const double mean = d.G_new[static_cast<std::size_t>(k)] / nz;
    d.G_new[static_cast<std::size_t>(k)] = mean;
    const double var = std::max(g_sq[static_cast<std::size_t>(k)] / nz - mean * mean, 0.0);
    d.G_stderr_max = std::max(d.G_stderr_max, std::sqrt(var / (nz - 1)));
  }
  d.q0_new = q_sum / nz;
  d.q0_stderr = std::sqrt(std::max(q_sq / nz - d.q0_new * d.q0_new, 0.0) / (nz - 1));
  d.negative_weight_fraction /= nz;
  for (int k = 0; k < n; ++k)
    d.residual_G = std::max(d.residual_G, std::abs(d.G_new[static_cast<std::size_t>(k)] - kernel.G[static_cast<std::size_t>(k)]));
  d.residual_q0 = std::abs(d.q0_new - kernel.q0);
  for (double v : d.G_new)
    if (!std::isfinite(v)) throw NumericalError("RS update produced a non-finite kernel");
  if (!std::isfinite(d.q0_new)) throw NumericalError("RS update produced a non-finite overlap");
  return d;
}

RsIterateDiagnostics rs_iterate(ImaginaryTimeKernel& kernel, const RsSolverConfig& config) {
  RsIterateDiagnostics d = rs_map(kernel, config);
  const double a = config.mixing;
  for (std::size_t k = 0; k < kernel.G.size(); ++k) kernel.G[k] = (1.0 - a) * kernel.G[k] + a * d.G_new[k];
  kernel.G[0] = 3.0;
  kernel.q0 = std::clamp((1.0 - a) * kernel.q0 + a * d.q0_new, 0.0, 3.0);
  kernel.refresh();
  return d;
}

RsSolveReport rs_solve(double beta, double J, int p, const RsSolverConfig& config) {
  config.validate();
  RsSolveReport report;
  if (config.init) {
    report.kernel = *config.init;
    require(report.kernel.n_tau() == config.n_tau, "initial kernel grid differs from n_tau");
    require(report.kernel.p == p && report.kernel.J == J && report.kernel.beta == beta,
            "initial kernel parameters differ from the requested (beta, J, p)");
  } else {
    report.kernel = liouville_init(beta, J, p, config.n_tau);
    report.kernel.q0 = config.q0_init;
  }
  report.kernel.refresh();

  ImaginaryTimeKernel last_stable = report.kernel;
  std::vector<double> steps;
  for (int it = 1; it <= config.max_iters; ++it) {
    RsIterateDiagnostics d;
    try {
      d = rs_iterate(report.kernel, config);
    } catch (const NumericalError&) {
      report.kernel = last_stable;
      throw;
    }
    last_stable = report.kernel;
    report.iterations = it;
    report.residual = std::max(d.residual_G, d.residual_q0);
    report.q0_stderr = d.q0_stderr;
    report.clipped_fraction = std::max(report.clipped_fraction, d.clipped_fraction);
    report.q0_history.push_back(report.kernel.q0);
    steps.push_back(d.q0_new - (report.q0_history.size() > 1 ? report.q0_history[report.q0_history.size() - 2] : config.q0_init));
    if (report.residual < config.tolerance) {
      report.converged = true;
      break;
    }
  }
  // flag alternating overlap updates over the last iterations
  if (steps.size() >= 8) {
    int flips = 0;
    for (std::size_t i = steps.size() - 7; i < steps.size(); ++i)
      if (steps[i] * steps[i - 1] < 0.0) ++flips;
    report.oscillating = flips >= 4;
  }
  return report;
}

std::vector<RsScanPoint> rs_scan(std::vector<double> betas, double J, int p, const RsSolverConfig& config,
                                 double q0_seed) {
  config.validate();
  require(!betas.empty(), "scan needs at least one beta");
  require(q0_seed >= 0.0 && q0_seed <= 3.0, "q0 seed must lie in [0, 3]");
  std::sort(betas.begin(), betas.end());
  std::vector<RsScanPoint> out;
  std::optional<ImaginaryTimeKernel> previous;
  for (double beta : betas) {
    RsScanPoint point;
    point.beta = beta;
    ImaginaryTimeKernel init = previous ? *previous : liouville_init(beta, J, p, config.n_tau);
    init.beta = beta;
    init.q0 = std::max(init.q0, q0_seed);
    init.refresh();
    RsSolverConfig c = config;
    c.init = init;
    c.q0_init = init.q0;
    try {
      point.report = rs_solve(beta, J, p, c);
      point.ok = true;
      previous = point.report.kernel;
    } catch (const NumericalError& e) {
      point.error = e.what();
    }
    out.push_back(std::move(point));
  }
  return out;
}

double scan_crossover(const std::vector<RsScanPoint>& points, double threshold) {
  for (const RsScanPoint& point : points)
    if (point.ok && point.report.converged && point.report.kernel.q0 > threshold) return point.beta;
  return std::numeric_limits<double>::quiet_NaN();
}

TapResult tap_complexity(const ImaginaryTimeKernel& kernel, double q1, const TapConfig& config) {
  require(q1 >= 0.0 && q1 <= 3.0, "q1 must lie in [0, 3]");
  require(config.n_z >= 2 && config.n_xi >= 2, "TAP sampling needs at least two z and xi samples");
  const int n = kernel.n_tau();
  const double q1_hat = kernel.J * kernel.J * int_pow(q1, kernel.p - 1);
  const std::vector<double> cov = xi_covariance(kernel, q1_hat);
  std::vector<double> log_zeta(static_cast<std::size_t>(config.n_z));
  // the same xi paths serve every z, so zeta(z) differences come from z alone
  const CounterRng stream = CounterRng::from_seed(config.seed).derive(kXiStream);
  parallel_sites(config.n_z, config.threads, cov, n, [&](int i, PathSampler& sampler, Workspace& ws) {
    const auto z = draw_z(config.seed, i, q1_hat);
    log_zeta[static_cast<std::size_t>(i)] = run_site(kernel, z, sampler, stream, config.n_xi, ws).log_zeta;
  });

  TapResult r;
  r.energy_term = 0.5 * kernel.beta * kernel.J * kernel.beta * kernel.J * (1.0 - 1.0 / kernel.p) * int_pow(q1, kernel.p);
  const double top = *std::max_element(log_zeta.begin(), log_zeta.end());
  const auto m = static_cast<std::size_t>(config.n_z);
  std::vector<double> w(m), wl(m);
  double sw = 0.0, swl = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    w[i] = std::exp(log_zeta[i] - top);
    wl[i] = w[i] * (log_zeta[i] - top);
    sw += w[i];
    swl += wl[i];
  }
  // KL(P || Q) = E_Q[zeta log zeta] / E_Q zeta - log E_Q zeta, shifted by the common log scale
  auto kl_of = [](double sum_w, double sum_wl, double count) { return sum_wl / sum_w - std::log(sum_w / count); };
  r.kl = kl_of(sw, swl, static_cast<double>(m));
  r.S = r.energy_term - r.kl;

  std::vector<double> jack(m);
  double jack_mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    jack[i] = r.energy_term - kl_of(sw - w[i], swl - wl[i], static_cast<double>(m - 1));
    jack_mean += jack[i];
  }
  jack_mean /= static_cast<double>(m);
  double acc = 0.0;
  for (double v : jack) acc += (v - jack_mean) * (v - jack_mean);
  r.stderr_S = std::sqrt(acc * static_cast<double>(m - 1) / static_cast<double>(m));
  r.low_precision = std::abs(r.S) > 0.0 && r.stderr_S > 0.2 * std::abs(r.S);
  return r;
}

nlohmann::json to_json(const ImaginaryTimeKernel& k) {
  return {{"beta", k.beta}, {"J", k.J}, {"p", k.p}, {"n_tau", k.n_tau()}, {"G", k.G},
          {"Sigma", k.Sigma}, {"q0", k.q0}, {"q0_hat", k.q0_hat}};
}

ImaginaryTimeKernel kernel_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("G") && j.contains("beta") && j.contains("p"), "kernel JSON needs beta, p and G");
  ImaginaryTimeKernel k;
  k.beta = j.at("beta").get<double>();
  k.J = j.value("J", 1.0);
  k.p = j.at("p").get<int>();
  k.G = j.at("G").get<std::vector<double>>();
  k.q0 = j.value("q0", 0.0);
  require(k.beta > 0.0 && k.J > 0.0 && k.p >= 2, "kernel JSON parameters out of range");
  require(k.G.size() >= 4 && k.G.size() % 2 == 0, "kernel grid must be even and at least 4");
  k.refresh();
  return k;
}

}  // namespace glasslab::replica
