#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace glmphase {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (negative SNR, q outside [0, rho], ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An integrand produced a non-finite value.
class QuadratureError : public Error {
 public:
  QuadratureError(const std::string& what, double abscissa)
      : Error(what + " at x=" + std::to_string(abscissa)), abscissa_(abscissa) {}

  double abscissa() const noexcept { return abscissa_; }

 private:
  double abscissa_;
};

/// Root finder was handed an interval without a sign change.
class BracketError : public Error {
 public:
  using Error::Error;
};

/// An iteration produced a non-finite iterate. Carries the iterates seen so far.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::vector<double> trajectory)
      : Error(what), trajectory_(std::move(trajectory)) {}

  const std::vector<double>& trajectory() const noexcept { return trajectory_; }

 private:
  std::vector<double> trajectory_;
};

/// The two independent optimizations of the replica potential disagree.
class RouteMismatchError : public Error {
 public:
  using Error::Error;
};

/// Output evidence underflowed: the assumed channel gives zero probability to an observed label.
class EvidenceUnderflowError : public Error {
 public:
  using Error::Error;
};

}  // namespace glmphase
