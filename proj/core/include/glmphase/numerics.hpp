#pragma once

// Quadrature, root finding and damped fixed-point iteration shared by the
// analytic modules. Every Gaussian expectation in the library is taken under
// the standard normal measure, so quadrature weights are a probability vector.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace glmphase {

inline constexpr int kDefaultHermiteOrder = 99;
inline constexpr double kDefaultIntegrationTol = 1e-9;

/// Gauss-Hermite rule for E[f(Z)], Z ~ N(0,1). Weights sum to one.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t order() const noexcept { return nodes.size(); }

  template <class F>
  double expect(F&& f) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
    return acc;
  }
};

/// Probabilists' Gauss-Hermite rule of the given order; exact for polynomials
/// up to degree 2*order-1. Throws DomainError for order < 1.
QuadratureRule gauss_hermite(int order);

/// Process-wide cached rule of order kDefaultHermiteOrder.
const QuadratureRule& default_hermite_rule();

/// Adaptive Simpson estimate of the integral of f over [lo, hi] to absolute
/// tolerance tol. Throws QuadratureError on a non-finite sample.
double integrate_1d(const std::function<double(double)>& f, double lo, double hi,
                    double tol = kDefaultIntegrationTol);

/// Adaptive Gauss-Kronrod (7/15) over [lo, hi] with relative tolerance,
/// split at the given interior breakpoints. Used for the nested channel
/// integrals where Simpson would need far more samples.
double integrate_gk(const std::function<double(double)>& f, double lo, double hi,
                    std::span<const double> breakpoints = {}, double rel_tol = 1e-11);

/// E[f(V)] for V ~ N(0,1), integrated adaptively on [-10, 10] with the given
/// breakpoints (values of V where f has a kink or a sharp feature).
double expect_normal(const std::function<double(double)>& f,
                     std::span<const double> breakpoints = {}, double rel_tol = 1e-11);

/// Appends breakpoints resolving a feature of the given width centred at c:
/// c, c +- w, c +- 4w, c +- 16w, c +- 64w.
void add_feature(std::vector<double>& breakpoints, double center, double width);

/// Bisection root of f on [lo, hi]. Requires f(lo)*f(hi) <= 0 (BracketError otherwise).
double bisect(const std::function<double(double)>& f, double lo, double hi, double tol);

struct FixedPointOptions {
  double damping = 0.0;  // in [0, 1)
  double tol = 1e-10;
  int max_iter = 5000;

  void validate() const;
};

struct FixedPointResult {
  double x = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Iterates x <- (1-damping) F(x) + damping x until |x_{t+1} - x_t| < tol.
/// Throws DivergenceError carrying the trajectory if an iterate is non-finite.
FixedPointResult damped_fixed_point(const std::function<double(double)>& F, double x0,
                                    const FixedPointOptions& opts);

/// Golden-section maximizer of a unimodal f on [lo, hi].
double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                          double tol);

/// Deterministic sub-seed for stream `stream` of `seed` (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

/// Shortest decimal text that parses back to exactly x.
std::string format_shortest(double x);

}  // namespace glmphase
