#pragma once

// Signal priors P0: sampling, the scalar Gaussian-channel denoiser and the
// free entropy psi(r) of the channel Y0 = sqrt(r) X0 + Z0.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace glmphase {

/// SNR values above this are treated as +infinity.
inline constexpr double kSnrCap = 1e9;

enum class PriorKind { Gaussian, Rademacher, GaussBernoulli, TwoPoint };

/// Mixture of point masses and (at most) one centred Gaussian component.
class Prior {
 public:
  static Prior gaussian(double variance = 1.0);
  static Prior rademacher(double p_plus = 0.5);
  /// sparsity * N(0,1) + (1 - sparsity) * delta_0.
  static Prior gauss_bernoulli(double sparsity);
  static Prior two_point(double value_a, double value_b, double prob_a);

  PriorKind kind() const noexcept { return kind_; }
  /// rho = E[X^2].
  double second_moment() const noexcept { return second_moment_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return second_moment_ - mean_ * mean_; }
  bool is_discrete() const noexcept { return gauss_weight_ == 0.0; }
  /// Parameter of the kind: variance, p_plus, sparsity or prob_a.
  double parameter() const noexcept { return parameter_; }
  std::string describe() const;

  const std::vector<double>& atoms() const noexcept { return atoms_; }
  const std::vector<double>& atom_probs() const noexcept { return atom_probs_; }
  double gauss_weight() const noexcept { return gauss_weight_; }
  double gauss_variance() const noexcept { return gauss_variance_; }

  double draw(std::mt19937_64& rng) const;

 private:
  Prior() = default;
  void finalize();

  PriorKind kind_ = PriorKind::Gaussian;
  double parameter_ = 1.0;
  std::vector<double> atoms_;
  std::vector<double> atom_probs_;
  double gauss_weight_ = 0.0;
  double gauss_variance_ = 0.0;
  double mean_ = 0.0;
  double second_moment_ = 0.0;
};

struct DenoiserOutput {
  double mean;
  double variance;
};

/// Posterior of X ~ P0 under the tilt exp(field * x - precision * x^2 / 2).
struct TiltedMoments {
  double log_norm;  // log E_{P0}[exp(field x - precision x^2/2)]
  double mean;
  double variance;
};
TiltedMoments tilted_moments(const Prior& prior, double field, double precision);

std::vector<double> sample(const Prior& prior, std::size_t count, std::uint64_t seed);

/// Posterior mean/variance of X given R = X + N(0, 1/lambda). lambda = 0 gives the prior moments.
DenoiserOutput denoise(const Prior& prior, double R, double lambda);

/// psi_{P0}(r) = E ln int dP0(x) exp(sqrt(r) Y0 x - r x^2 / 2).
double psi_p0(const Prior& prior, double r);

/// psi'_{P0}(r) = E[g_{P0}(Y0, r)^2] / 2.
double psi_p0_prime(const Prior& prior, double r);

/// Scalar mutual information I(X0; sqrt(r) X0 + Z0) = r rho / 2 - psi(r).
double mutual_info_p0(const Prior& prior, double r);

}  // namespace glmphase
