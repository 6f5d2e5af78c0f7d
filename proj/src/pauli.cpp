#include "glasslab/pauli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "glasslab/rng.hpp"
#include "glasslab/state.hpp"

namespace glasslab::pauli {

namespace {

constexpr Complex kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

void check_dense(int n, int cap) {
  if (n > cap) throw SizeError("dense realization of " + std::to_string(n) + " qubits exceeds cap " + std::to_string(cap));
  require(n >= 1, "dense realization needs at least one qubit");
}

// Phase i^k of <b xor x| P |b>: i^{|x&z|} from the Y = iXZ convention times (-1)^{|z&b|}.
int column_phase(PauliString s, std::uint64_t b) {
  return (std::popcount(s.x_mask & s.z_mask) + 2 * std::popcount(s.z_mask & b)) & 3;
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

PauliString PauliString::single(int qubit, char letter) {
  require(qubit >= 0 && qubit < kMaxQubits, "qubit index out of range");
  const std::uint64_t bit = std::uint64_t{1} << qubit;
  switch (letter) {
    case 'I': return {};
    case 'X': return {bit, 0};
    case 'Y': return {bit, bit};
    case 'Z': return {0, bit};
    default: throw DomainError(std::string("unknown Pauli letter ") + letter);
  }
}

PauliString PauliString::parse(const std::string& text) {
  require(text.size() <= kMaxQubits, "Pauli string longer than 64 qubits");
  PauliString s;
  for (std::size_t r = 0; r < text.size(); ++r) {
    const PauliString one = single(static_cast<int>(r), text[r]);
    s.x_mask |= one.x_mask;
    s.z_mask |= one.z_mask;
  }
  return s;
}

char PauliString::letter(int qubit) const {
  const bool x = (x_mask >> qubit) & 1U;
  const bool z = (z_mask >> qubit) & 1U;
  if (x && z) return 'Y';
  if (x) return 'X';
  if (z) return 'Z';
  return 'I';
}

std::string PauliString::to_string(int n) const {
  std::string out(static_cast<std::size_t>(n), 'I');
  for (int r = 0; r < n; ++r) out[static_cast<std::size_t>(r)] = letter(r);
  return out;
}

PauliProduct multiply(PauliString a, PauliString b) {
  const PauliString c{a.x_mask ^ b.x_mask, a.z_mask ^ b.z_mask};
  // i^{x1z1} X^x1 Z^z1 i^{x2z2} X^x2 Z^z2 = i^{x1z1+x2z2} (-1)^{z1 x2} X^x3 Z^z3
  const int k = std::popcount(a.x_mask & a.z_mask) + std::popcount(b.x_mask & b.z_mask) -
                std::popcount(c.x_mask & c.z_mask) + 2 * std::popcount(a.z_mask & b.x_mask);
  return {((k % 4) + 4) % 4, c};
}

PauliHamiltonian::PauliHamiltonian(int n, std::vector<Term> terms, std::optional<EnsembleInfo> ensemble)
    : n_(n), terms_(std::move(terms)), ensemble_(ensemble) {
  require(n >= 1 && n <= kMaxQubits, "qubit count out of range");
  const std::uint64_t outside = n == 64 ? 0 : ~((std::uint64_t{1} << n) - 1);
  std::set<PauliString> seen;
  for (const Term& t : terms_) {
    require((t.string.support() & outside) == 0, "Pauli string acts outside the register");
    require(std::isfinite(t.coeff), "non-finite coefficient");
    require(seen.insert(t.string).second, "duplicate Pauli string " + t.string.to_string(n));
  }
}

PauliHamiltonian PauliHamiltonian::operator-() const {
  std::vector<Term> out = terms_;
  for (Term& t : out) t.coeff = -t.coeff;
  return PauliHamiltonian(n_, std::move(out), ensemble_);
}

PauliHamiltonian PauliHamiltonian::operator+(const PauliHamiltonian& other) const {
  require(n_ == other.n_, "qubit count mismatch in Hamiltonian sum");
  std::map<PauliString, double> merged;
  std::vector<PauliString> order;
  for (const auto* h : {this, &other}) {
    for (const Term& t : h->terms_) {
      auto [it, inserted] = merged.emplace(t.string, 0.0);
      if (inserted) order.push_back(t.string);
      it->second += t.coeff;
    }
  }
  std::vector<Term> out;
  out.reserve(order.size());
  for (const PauliString& s : order) out.push_back({merged[s], s});
  return PauliHamiltonian(n_, std::move(out));
}

double ensemble_variance(int n, int p, double J) {
  return J * J * factorial(p - 1) / std::pow(static_cast<double>(n), p - 1);
}

std::vector<PauliString> enumerate_weight(int n, int p) {
  require(p >= 1 && p <= n, "locality p must satisfy 1 <= p <= n");
  require(n <= kMaxQubits, "qubit count out of range");
  std::vector<PauliString> out;
  std::vector<int> support(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) support[static_cast<std::size_t>(i)] = i;
  int letters_count = 1;
  for (int i = 0; i < p; ++i) letters_count *= 3;
  while (true) {
    for (int code = 0; code < letters_count; ++code) {
      PauliString s;
      int rem = code;
      // last support qubit varies fastest
      for (int i = p - 1; i >= 0; --i) {
        const char letter = "XYZ"[rem % 3];
        rem /= 3;
        const PauliString one = PauliString::single(support[static_cast<std::size_t>(i)], letter);
        s.x_mask |= one.x_mask;
        s.z_mask |= one.z_mask;
      }
      out.push_back(s);
    }
    int i = p - 1;
    while (i >= 0 && support[static_cast<std::size_t>(i)] == n - p + i) --i;
    if (i < 0) break;
    ++support[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < p; ++k) support[static_cast<std::size_t>(k)] = support[static_cast<std::size_t>(k - 1)] + 1;
  }
  return out;
}

PauliHamiltonian sample_ensemble(int n, int p, double J, std::uint64_t seed) {
  require(n >= 1 && n <= kMaxQubits, "qubit count out of range");
  require(p >= 1 && p <= n, "locality p must satisfy 1 <= p <= n");
  require(J > 0.0 && std::isfinite(J), "coupling J must be positive");
  const double sd = std::sqrt(ensemble_variance(n, p, J));
  CounterRng rng = CounterRng::from_seed(seed).derive(0x656e73656d626c65ULL);  // "ensemble"
  std::vector<Term> terms;
  for (const PauliString& s : enumerate_weight(n, p)) terms.push_back({sd * rng.gaussian(), s});
  return PauliHamiltonian(n, std::move(terms), EnsembleInfo{p, J, seed});
}

Matrix to_dense(PauliString s, int n, int dense_cap) {
  check_dense(n, dense_cap);
  const std::uint64_t dim = std::uint64_t{1} << n;
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::uint64_t b = 0; b < dim; ++b)
    m(static_cast<Eigen::Index>(b ^ s.x_mask), static_cast<Eigen::Index>(b)) = kIPow[column_phase(s, b)];
  return m;
}

Matrix to_dense(const PauliHamiltonian& h, int dense_cap) {
  check_dense(h.n(), dense_cap);
  const std::uint64_t dim = std::uint64_t{1} << h.n();
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const Term& t : h.terms()) {
    for (std::uint64_t b = 0; b < dim; ++b)
      m(static_cast<Eigen::Index>(b ^ t.string.x_mask), static_cast<Eigen::Index>(b)) +=
          t.coeff * kIPow[column_phase(t.string, b)];
  }
  return m;
}

void add_scaled(PauliString s, Complex coeff, Matrix& m) {
  const std::uint64_t dim = static_cast<std::uint64_t>(m.rows());
  require((s.support() & ~(dim - 1)) == 0, "Pauli string acts outside the register");
  for (std::uint64_t b = 0; b < dim; ++b)
    m(static_cast<Eigen::Index>(b ^ s.x_mask), static_cast<Eigen::Index>(b)) += coeff * kIPow[column_phase(s, b)];
}

Complex trace_product(PauliString s, const Matrix& a) {
  const std::uint64_t dim = static_cast<std::uint64_t>(a.rows());
  require(a.rows() == a.cols() && std::has_single_bit(dim), "matrix must be square with power-of-two size");
  require((s.support() & ~(dim - 1)) == 0, "Pauli string acts outside the register");
  // Tr[P A] = sum_b <b|A|b^x> <b^x|P|b>
  Complex acc = 0.0;
  for (std::uint64_t b = 0; b < dim; ++b)
    acc += kIPow[column_phase(s, b)] * a(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b ^ s.x_mask));
  return acc;
}

double pauli_expectation(PauliString s, const Matrix& rho) {
  const Complex acc = trace_product(s, rho);
  if (std::abs(acc.imag()) > 1e-8)
    throw NumericalError("Pauli expectation has imaginary part " + std::to_string(acc.imag()));
  return acc.real();
}

double pauli_expectation(PauliString s, const DensityState& rho) { return pauli_expectation(s, rho.matrix()); }

nlohmann::json to_json(const PauliHamiltonian& h) {
  nlohmann::json terms = nlohmann::json::array();
  for (const Term& t : h.terms())
    terms.push_back({{"coeff", t.coeff}, {"x", hex(t.string.x_mask)}, {"z", hex(t.string.z_mask)}});
  nlohmann::json out = {{"n", h.n()}, {"terms", std::move(terms)}};
  if (h.ensemble()) {
    out["p"] = h.ensemble()->p;
    out["J"] = h.ensemble()->J;
    out["seed"] = h.ensemble()->seed;
  }
  return out;
}

PauliHamiltonian hamiltonian_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("n") && j.contains("terms"), "Hamiltonian JSON needs fields n and terms");
  const int n = j.at("n").get<int>();
  std::vector<Term> terms;
  for (const auto& t : j.at("terms")) {
    const auto parse_hex = [](const nlohmann::json& v) {
      return static_cast<std::uint64_t>(std::stoull(v.get<std::string>(), nullptr, 16));
    };
    terms.push_back({t.at("coeff").get<double>(), {parse_hex(t.at("x")), parse_hex(t.at("z"))}});
  }
  std::optional<EnsembleInfo> info;
  if (j.contains("p") && j.contains("J") && j.contains("seed"))
    info = EnsembleInfo{j.at("p").get<int>(), j.at("J").get<double>(), j.at("seed").get<std::uint64_t>()};
  return PauliHamiltonian(n, std::move(terms), info);
}

}  // namespace glasslab::pauli
