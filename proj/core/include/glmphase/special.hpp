#pragma once

// Gaussian special functions evaluated in a numerically stable way far into
// the tails.

#include <cmath>
#include <numbers>

namespace glmphase::special {

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

inline double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
inline double log_normal_pdf(double x) { return -0.5 * x * x - kLogSqrt2Pi; }

/// Density of N(mean, var) at x.
inline double gaussian_density(double x, double mean, double var) {
  const double d = x - mean;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}
inline double log_gaussian_density(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * d * d / var - 0.5 * std::log(2.0 * std::numbers::pi * var);
}

/// P(Z <= x).
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Mills ratio (1 - Phi(t)) / phi(t); accurate for any t.
double mills_ratio(double t);

/// log P(Z <= x), accurate for x -> -infinity.
double log_normal_cdf(double x);

/// Truncated standard normal on [a, b] (either end may be infinite).
struct TruncatedMoments {
  double log_mass;  // log P(a <= Z <= b)
  double mean;      // E[Z | a <= Z <= b]
  double second;    // E[Z^2 | a <= Z <= b]
  double excess;    // second - 1, computed without cancellation
};
TruncatedMoments truncated_normal(double a, double b);

/// log(exp(a) + exp(b)) without overflow.
inline double log_add(double a, double b) {
  if (a == -INFINITY) return b;
  if (b == -INFINITY) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

/// Logistic function 1 / (1 + exp(-x)).
inline double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace glmphase::special
