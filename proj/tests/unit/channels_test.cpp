#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "glmphase/channels.hpp"
#include "glmphase/errors.hpp"
#include "glmphase/numerics.hpp"
#include "glmphase/special.hpp"

using namespace glmphase;

namespace {

constexpr double kDoorK = 0.67449;

double trapezoid(const std::function<double(double)>& f, double lo, double hi, int n = 200000) {
  const double h = (hi - lo) / n;
  double acc = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n; ++i) acc += f(lo + i * h);
  return acc * h;
}

std::vector<Channel> noisy_channels() {
  return {Channel::linear(0.5), Channel::sign(0.1), Channel::abs(0.2), Channel::relu(0.3),
          Channel::door(kDoorK, 0.1)};
}

std::vector<Channel> discrete_channels() {
  return {Channel::sign(), Channel::door(kDoorK), Channel::sigmoid(2.0)};
}

std::vector<Channel> psi_channels() {
  return {Channel::linear(1.0), Channel::sign(), Channel::sign(0.2), Channel::abs(0.1),
          Channel::relu(0.1), Channel::door(kDoorK), Channel::sigmoid(3.0)};
}

}  // namespace

TEST(SampleLabel, Examples) {
  EXPECT_EQ(sample_label(Channel::linear(0.0), 1.3, 1), 1.3);
  EXPECT_EQ(sample_label(Channel::sign(), -0.7, 1), -1.0);
  EXPECT_EQ(sample_label(Channel::door(kDoorK), 0.2, 1), -1.0);
  EXPECT_EQ(sample_label(Channel::door(kDoorK), -0.9, 1), 1.0);
  EXPECT_EQ(sample_label(Channel::door(kDoorK), kDoorK, 1), 1.0);
  EXPECT_EQ(sample_label(Channel::abs(), -2.5, 1), 2.5);
}

TEST(SampleLabel, DeterministicAndNoisy) {
  const Channel c = Channel::linear(1.0);
  EXPECT_EQ(sample_label(c, 0.0, 9), sample_label(c, 0.0, 9));
  EXPECT_NE(sample_label(c, 0.0, 9), sample_label(c, 0.0, 10));
}

TEST(SampleLabel, SigmoidFrequency) {
  const Channel c = Channel::sigmoid(2.0);
  const int n = 100000;
  const double z = 0.4;
  double plus = 0;
  for (int i = 0; i < n; ++i) plus += sample_label(c, z, mix_seed(77, i)) > 0;
  const double p = 1.0 / (1.0 + std::exp(-2.0 * z));
  EXPECT_NEAR(plus / n, p, 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST(Channel, Flags) {
  EXPECT_TRUE(Channel::abs(0.1).is_even());
  EXPECT_TRUE(Channel::door(kDoorK).is_even());
  EXPECT_FALSE(Channel::sign().is_even());
  EXPECT_FALSE(Channel::linear(1.0).is_even());
  EXPECT_TRUE(Channel::sign().is_discrete());
  EXPECT_FALSE(Channel::sign(0.1).is_discrete());
  EXPECT_TRUE(Channel::linear(0.0).is_noiseless_continuous());
  EXPECT_TRUE(Channel::abs().is_noiseless_continuous());
  EXPECT_FALSE(Channel::relu(1e-8).is_noiseless_continuous());
}

TEST(Channel, RejectsInvalidParameters) {
  EXPECT_THROW(Channel::linear(-1.0), DomainError);
  EXPECT_THROW(Channel::relu(0.0), DomainError);
  EXPECT_THROW(Channel::door(0.0), DomainError);
  EXPECT_THROW(Channel::sigmoid(0.0), DomainError);
  EXPECT_THROW(Channel::sign().with_epsilon(-0.1), DomainError);
  EXPECT_THROW(Channel::relu(0.1).with_delta(0.0), DomainError);
  EXPECT_THROW(Channel::sigmoid(1.0).with_delta(0.1), DomainError);
}

TEST(Channel, WithDeltaKeepsKind) {
  const Channel c = Channel::door(0.5, 0.0).with_delta(0.25);
  EXPECT_EQ(c.kind(), ChannelKind::Door);
  EXPECT_EQ(c.delta(), 0.25);
  EXPECT_EQ(c.threshold(), 0.5);
  EXPECT_FALSE(c.is_discrete());
}

TEST(Density, Examples) {
  EXPECT_NEAR(density(Channel::linear(1.0), 0.8, 0.8), special::kInvSqrt2Pi, 1e-15);
  EXPECT_EQ(density(Channel::sign(), 1.0, 0.3), 1.0);
  EXPECT_EQ(density(Channel::sign(), 1.0, -0.3), 0.0);
  EXPECT_EQ(density(Channel::sign(), 0.5, 0.3), 0.0);
  EXPECT_NEAR(density(Channel::abs(1.0), 0.0, 2.0), std::exp(-2.0) / std::sqrt(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(density(Channel::abs(1.0), 0.0, 2.0), 0.05399, 1e-5);
}

TEST(Density, NoiselessContinuousRejected) {
  EXPECT_THROW(density(Channel::linear(0.0), 0.0, 0.0), DomainError);
  EXPECT_THROW(density(Channel::abs(), 1.0, 1.0), DomainError);
}

TEST(Density, NormalizedInY) {
  for (const Channel& c : noisy_channels())
    for (double z : {-1.7, -0.2, 0.0, 0.9, 2.3}) {
      const double s = std::sqrt(c.delta());
      const double total = trapezoid([&](double y) { return density(c, y, z); }, -4.0 - 12 * s, 4.0 + 12 * s);
      EXPECT_NEAR(total, 1.0, 1e-8) << c.describe() << " z=" << z;
    }
  for (const Channel& c : discrete_channels())
    for (double z : {-1.7, -0.2, 0.5, 2.3}) {
      double total = 0;
      for (double y : c.labels()) total += density(c, y, z);
      EXPECT_NEAR(total, 1.0, 1e-14) << c.describe();
    }
}

TEST(Zout, ZeroVarianceIsDensity) {
  for (const Channel& c : noisy_channels())
    EXPECT_NEAR(zout(c, 0.4, 0.7, 0.0), density(c, 0.4, 0.7), 1e-14) << c.describe();
  EXPECT_EQ(zout(Channel::sign(), 1.0, 0.7, 0.0), 1.0);
}

TEST(Zout, ContinuousInVarianceAtZero) {
  for (const Channel& c : noisy_channels())
    EXPECT_NEAR(zout(c, 0.4, 0.7, 1e-8), density(c, 0.4, 0.7), 1e-6) << c.describe();
}

TEST(Zout, LinearGaussianConvolution) {
  for (double delta : {0.0, 0.5})
    EXPECT_NEAR(zout(Channel::linear(delta), 1.2, 0.3, 0.8), special::gaussian_density(1.2, 0.3, delta + 0.8),
                1e-13);
}

TEST(Zout, SignGaussianTail) {
  for (double omega : {-2.0, 0.0, 0.5})
    EXPECT_NEAR(zout(Channel::sign(), 1.0, omega, 0.6), special::normal_cdf(omega / std::sqrt(0.6)), 1e-13);
}

TEST(Zout, NoisyDoorClosedForm) {
  // z ~ N(omega, V) lands outside [-K, K) with probability p_out; y is then N(+1, Delta), else N(-1, Delta).
  const double delta = 0.3, y = 0.4, omega = 0.2, V = 0.9, s = std::sqrt(V);
  const double p_in = special::normal_cdf((kDoorK - omega) / s) - special::normal_cdf((-kDoorK - omega) / s);
  const double oracle =
      (1.0 - p_in) * special::gaussian_density(y, 1.0, delta) + p_in * special::gaussian_density(y, -1.0, delta);
  EXPECT_NEAR(zout(Channel::door(kDoorK, delta), y, omega, V), oracle, 1e-12);
}

TEST(Gout, LinearClosedForm) {
  for (double delta : {0.1, 1.0}) {
    const double y = 0.9, omega = -0.4, V = 0.7;
    EXPECT_NEAR(gout(Channel::linear(delta), y, omega, V).gout, std::sqrt(V) * (y - omega) / (delta + V), 1e-12);
  }
}

TEST(Gout, SignInverseMills) {
  for (double omega : {-3.0, -0.5, 0.0, 1.0}) {
    const double V = 0.5, t = omega / std::sqrt(V);
    EXPECT_NEAR(gout(Channel::sign(), 1.0, omega, V).gout, special::normal_pdf(t) / special::normal_cdf(t), 1e-11);
  }
}

TEST(Gout, DeepTailStaysFinite) {
  const OutputDenoiser d = gout(Channel::sign(), 1.0, -40.0, 1.0);
  EXPECT_TRUE(std::isfinite(d.gout));
  EXPECT_NEAR(d.gout, 1.0 / special::mills_ratio(40.0), 1e-6 * d.gout);
  EXPECT_LT(d.log_zout, -700.0);
}

TEST(Gout, VanishesAtZeroOmegaForEvenChannels) {
  for (const Channel& c : {Channel::abs(0.1), Channel::door(kDoorK), Channel::door(kDoorK, 0.2)}) {
    const std::vector<double> ys = c.is_discrete() ? c.labels() : std::vector<double>{0.1, 0.8, 2.0};
    for (double y : ys) EXPECT_NEAR(gout(c, y, 0.0, 1.0).gout, 0.0, 1e-12) << c.describe() << " y=" << y;
  }
}

TEST(Gout, ImpossibleLabelIsAnEvidenceError) {
  EXPECT_THROW(gout(Channel::sign(), 0.5, 0.0, 1.0), EvidenceUnderflowError);
  EXPECT_THROW(gout(Channel::sign(), 1.0, 0.0, 0.0), DomainError);
}

TEST(PsiPout, SignAtEndpoints) {
  EXPECT_NEAR(psi_pout(Channel::sign(), 0.0, 1.0), std::log(0.5), 1e-12);
  EXPECT_NEAR(psi_pout(Channel::sign(), 1.0, 1.0), 0.0, 1e-12);
  EXPECT_NEAR(psi_pout(Channel::sign(), 1.0 - 1e-9, 1.0), 0.0, 1e-3);
}

TEST(PsiPout, LinearEntropy) {
  EXPECT_NEAR(psi_pout(Channel::linear(1.0), 0.0, 1.0),
              -0.5 * std::log(4.0 * std::numbers::pi * std::numbers::e), 1e-9);
  EXPECT_NEAR(psi_pout(Channel::linear(1.0), 0.0, 1.0), -1.76551, 1e-5);
  EXPECT_NEAR(psi_pout(Channel::linear(0.5), 0.6, 1.0),
              -0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * 0.9), 1e-9);
}

TEST(PsiPout, NoiselessContinuousDivergesAtRho) {
  EXPECT_EQ(psi_pout(Channel::linear(0.0), 1.0, 1.0), INFINITY);
}

TEST(PsiPout, ConvexAndNondecreasing) {
  const double rho = 1.0;
  for (const Channel& c : psi_channels()) {
    std::vector<double> v;
    for (int i = 0; i < 20; ++i) v.push_back(psi_pout(c, rho * i / 20.0, rho));
    for (int i = 0; i + 1 < 20; ++i) EXPECT_LE(v[i], v[i + 1] + 1e-10) << c.describe() << " i=" << i;
    for (int i = 1; i + 1 < 20; ++i)
      EXPECT_GE(v[i - 1] + v[i + 1], 2.0 * v[i] - 1e-8) << c.describe() << " i=" << i;
  }
}

TEST(PsiPout, RejectsQOutsideRange) {
  EXPECT_THROW(psi_pout(Channel::sign(), -0.1, 1.0), DomainError);
  EXPECT_THROW(psi_pout(Channel::sign(), 1.1, 1.0), DomainError);
  EXPECT_THROW(psi_pout_prime(Channel::sign(), 1.0, 1.0), DomainError);
}

TEST(PsiPoutPrime, LinearClosedForm) {
  EXPECT_NEAR(psi_pout_prime(Channel::linear(1.0), 0.0, 1.0), 0.25, 1e-10);
  EXPECT_NEAR(psi_pout_prime(Channel::linear(0.5), 0.3, 2.0), 1.0 / (2.0 * 2.2), 1e-10);
}

TEST(PsiPoutPrime, ZeroAtOriginForEvenChannels) {
  for (const Channel& c : {Channel::abs(0.1), Channel::door(kDoorK), Channel::door(kDoorK, 0.1)})
    EXPECT_NEAR(psi_pout_prime(c, 0.0, 1.0), 0.0, 1e-12) << c.describe();
}

TEST(PsiPoutPrime, MatchesFiniteDifferences) {
  const double rho = 1.0, h = 1e-4;
  for (const Channel& c : psi_channels())
    for (double frac : {0.1, 0.5, 0.9}) {
      const double q = frac * rho;
      const double fd = (psi_pout(c, q + h, rho) - psi_pout(c, q - h, rho)) / (2 * h);
      EXPECT_NEAR(psi_pout_prime(c, q, rho) / fd, 1.0, 1e-4) << c.describe() << " q=" << q;
    }
}

TEST(PsiPoutPrime, BlowsUpNearRhoForNoiselessChannels) {
  for (const Channel& c : {Channel::sign(), Channel::door(kDoorK), Channel::abs()}) {
    const double near = psi_pout_prime(c, 1.0 - 1e-6, 1.0);
    const double nearer = psi_pout_prime(c, 1.0 - 1e-8, 1.0);
    EXPECT_GT(nearer, 1e3) << c.describe();
    // Sign and Door grow like (rho - q)^(-1/2), Abs like (rho - q)^(-1).
    EXPECT_GT(nearer / near, 9.9) << c.describe();
  }
}

TEST(PsiPoutPrime, SignNearRhoAgainstDirectIntegral) {
  // E[gout^2] = int Dv N(t)^2 (1/Phi(t) + 1/Phi(-t)), t = sqrt(q / V) v.
  const double rho = 1.0, q = 1.0 - 1e-6, V = rho - q, a = std::sqrt(q / V);
  const double e_g2 = trapezoid(
      [a](double v) {
        // N(t)^2 / Phi(t) = N(t) / mills(-t).
        const double t = a * v, n = special::normal_pdf(t);
        return special::normal_pdf(v) * n * (1.0 / special::mills_ratio(-t) + 1.0 / special::mills_ratio(t));
      },
      -40.0 / a, 40.0 / a, 400000);
  EXPECT_NEAR(psi_pout_prime(Channel::sign(), q, rho) / (e_g2 / (2.0 * V)), 1.0, 1e-6);
}

TEST(StabilityIntegral, AbsIsTwo) {
  EXPECT_NEAR(stability_integral(Channel::abs(1e-8), 1.0), 2.0, 1e-3);
  EXPECT_NEAR(stability_integral(Channel::abs(1e-8), 0.5), 2.0, 1e-3);
}

TEST(StabilityIntegral, DoorMatchesStabilityLimit) {
  EXPECT_NEAR(stability_integral(Channel::door(kDoorK), 1.0), 1.0 / 1.36, 1e-3);
}

TEST(StabilityIntegral, UninformativeChannelIsZero) {
  // With K = 15 the label is +1 except on an event of probability ~1e-50.
  EXPECT_NEAR(stability_integral(Channel::door(15.0), 1.0), 0.0, 1e-12);
}

TEST(StabilityIntegral, DoorAgainstDirectSum) {
  // Two labels: int Dz (z^2 - 1) 1{|z| < K} = -2 K N(K), and the evidences are erf-based.
  const double K = 1.1;
  const double inner = -2.0 * K * special::normal_pdf(K);
  const double p_minus = 2.0 * special::normal_cdf(K) - 1.0;
  EXPECT_NEAR(stability_integral(Channel::door(K), 1.0), inner * inner / p_minus + inner * inner / (1 - p_minus),
              1e-10);
}

TEST(StabilityIntegral, RejectsNonEvenChannel) {
  EXPECT_THROW(stability_integral(Channel::sign(), 1.0), DomainError);
}

TEST(Epsilon, ShiftsDoorUpperEdge) {
  const Channel c = Channel::door(kDoorK).with_epsilon(0.01);
  EXPECT_EQ(sample_label(c, kDoorK + 0.005, 1), -1.0);
  EXPECT_EQ(sample_label(c, -kDoorK - 0.005, 1), 1.0);
  EXPECT_EQ(sample_label(Channel::door(kDoorK), kDoorK + 0.005, 1), 1.0);
}
