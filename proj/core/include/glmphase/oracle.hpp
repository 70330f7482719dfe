#pragma once

// Ground truth for tests: exhaustive posteriors on tiny instances, Nishimori
// identity checks and Monte-Carlo estimators of the scalar free entropies.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "glmphase/channels.hpp"
#include "glmphase/gamp.hpp"
#include "glmphase/priors.hpp"

namespace glmphase {

inline constexpr int kMaxExactDimension = 16;
inline constexpr std::uint64_t kMaxExactConfigurations = 1ULL << 20;

struct ExactPosterior {
  int support_size = 0;
  /// Configurations in lexicographic order over the prior atoms (index 0 varies slowest).
  std::vector<double> posterior_probs;
  Eigen::VectorXd posterior_means;
  double exact_mmse = 0.0;   // |X* - posterior mean|^2 / n
  double log_evidence = 0.0; // ln Z(Y, Phi), prior-weighted
  std::vector<double> atoms;

  /// Value of coordinate i in configuration c.
  double value(std::size_t c, int i, int n) const;
};

/// Requires a discrete prior, n <= 16 and support^n <= 2^20 (DomainError otherwise),
/// and a channel with a density or pmf.
ExactPosterior exact_posterior(const Instance& inst);

/// Two-replica statistic g(x1, x2) of configurations of length n.
using ReplicaStatistic = std::function<double(std::span<const double>, std::span<const double>)>;

struct NishimoriCheck {
  double lhs = 0.0;  // E <g(x1, x2)>
  double rhs = 0.0;  // E <g(x1, X*)>
  double lhs_stderr = 0.0;
  double rhs_stderr = 0.0;
  double z_score = 0.0;  // |mean(lhs - rhs)| / stderr of the paired difference
};

/// Draws `samples` teacher instances and evaluates both brackets exactly.
NishimoriCheck nishimori_check(const Prior& prior, const Channel& channel, int n, double alpha,
                               const ReplicaStatistic& statistic, int samples, std::uint64_t seed);

/// The overlap statistic x1 . x2 / n.
double overlap_statistic(std::span<const double> a, std::span<const double> b);

struct MonteCarloEstimate {
  double estimate = 0.0;
  double stderr_ = 0.0;
};

/// Monte-Carlo over Y0 = sqrt(r) X0 + Z0 of ln E_{P0} exp(sqrt(r) Y0 x - r x^2 / 2).
MonteCarloEstimate mc_psi_p0(const Prior& prior, double r, int samples, std::uint64_t seed);

/// Monte-Carlo over (V, Y) of ln int Dw P_out(Y | sqrt(q) V + sqrt(rho - q) w).
MonteCarloEstimate mc_psi_pout(const Channel& channel, double q, double rho, int samples,
                               std::uint64_t seed);

}  // namespace glmphase
