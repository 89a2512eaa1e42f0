#pragma once

// Shared aliases and error types used across the library.

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace triplewave {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Complex = std::complex<double>;

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point or covector lies outside the region where an object is defined.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent arguments (empty sample sets, mismatched grids, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A numeric procedure failed (non-finite value, differentiation failure, ...).
/// The message carries the location where the failure was detected.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// A requested feature is not available for the given inputs
/// (e.g. closed-form queries on a scenario that has none).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// ODE integration failed; carries the last good parameter value.
class IntegrationError : public Error {
 public:
  IntegrationError(const std::string& what, double s_last) : Error(what), s_last(s_last) {}
  double s_last = 0.0;
};

/// Amplitude transport hit a vanishing ray-tube Jacobian.
class CausticError : public Error {
 public:
  CausticError(const std::string& what, double s) : Error(what), s(s) {}
  double s = 0.0;
};

/// Too few samples to carry out the requested fit/estimate.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// Run a loop body over [0, n) split into contiguous chunks, one per worker.
/// Chunk boundaries depend only on (n, threads), so any reduction done
/// per-chunk and combined in chunk order is deterministic.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace triplewave
