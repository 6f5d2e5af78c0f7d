#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace glasslab {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

inline constexpr const char* kVersion = "0.1.0";

/// Input outside an operation's domain (bad sizes, bad parameters, caps exceeded).
class DomainError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A numerical routine failed to meet its stated tolerance.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Raised when a dense realization would exceed a configured size cap.
class SizeError : public DomainError {
public:
  using DomainError::DomainError;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw DomainError(what);
}

}  // namespace glasslab
