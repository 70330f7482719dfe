#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include "glmphase/errors.hpp"
#include "glmphase/replica.hpp"
#include "glmphase/special.hpp"

using namespace glmphase;

namespace {

constexpr double kDoorK = 0.67449;

double trapezoid(const std::function<double(double)>& f, double lo, double hi, int n = 100000) {
  const double h = (hi - lo) / n;
  double acc = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n; ++i) acc += f(lo + i * h);
  return acc * h;
}

double gauss_expect(const std::function<double(double)>& f) {
  return trapezoid([&](double v) { return special::normal_pdf(v) * f(v); }, -12.0, 12.0);
}

// E[N(a V) ln N(a V)] with N the standard normal cdf.
double e_n_log_n(double a) {
  return gauss_expect([a](double v) { return special::normal_cdf(a * v) * special::log_normal_cdf(a * v); });
}

// Smaller root of q^2 - q (Delta + 1 + alpha) + alpha = 0, the Gaussian-prior
// linear-channel fixed point at rho = 1.
double gaussian_linear_q(double alpha, double delta) {
  const double b = delta + 1.0 + alpha;
  return 0.5 * (b - std::sqrt(b * b - 4.0 * alpha));
}

}  // namespace

TEST(FRs, AtOriginIsOutputTerm) {
  const Prior p = Prior::rademacher();
  const Channel c = Channel::sign();
  EXPECT_NEAR(f_rs(p, c, 1.7, 0.0, 0.0), 1.7 * psi_pout(c, 0.0, 1.0), 1e-14);
  EXPECT_NEAR(f_rs(p, c, 1.7, 0.0, 0.0), -1.7 * std::log(2.0), 1e-12);
}

TEST(FRs, PerceptronBracket) {
  const double q = 0.5, r = 0.5, alpha = 1.0;
  const double lncosh = gauss_expect([r](double z) { return std::log(std::cosh(std::sqrt(r) * z + r)); });
  const double bracket = lncosh + 2.0 * alpha * e_n_log_n(std::sqrt(q / (1.0 - q))) - r * (q + 1.0) / 2.0;
  EXPECT_NEAR(f_rs(Prior::rademacher(), Channel::sign(), alpha, q, r), bracket, 1e-6);
}

TEST(FRs, SphericalPerceptronSupInf) {
  // Gaussian prior: inf_r psi(r) - r q / 2 = q/2 + ln(1 - q)/2.
  const double alpha = 0.8;
  auto phi = [alpha](double q) {
    return 0.5 * std::log1p(-q) + 2.0 * alpha * e_n_log_n(std::sqrt(q / (1.0 - q))) + q / 2.0;
  };
  int best = 0;
  for (int i = 1; i < 100; ++i)
    if (phi(i / 100.0) > phi(best / 100.0)) best = i;
  double lo = std::max(0.0, (best - 1) / 100.0), hi = (best + 1) / 100.0;
  for (int k = 0; k < 60; ++k) {
    const double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    (phi(m1) < phi(m2) ? lo : hi) = phi(m1) < phi(m2) ? m1 : m2;
  }
  SEModel model(Prior::gaussian(), Channel::sign());
  EXPECT_NEAR(sup_q_inf_r(model, alpha).f, phi(0.5 * (lo + hi)), 1e-6);
}

TEST(FRs, ModelAndPairOverloadsAgree) {
  const Prior p = Prior::gauss_bernoulli(0.4);
  const Channel c = Channel::linear(0.3);
  SEModel model(p, c);
  EXPECT_NEAR(f_rs(model, 1.3, 0.2, 0.9), f_rs(p, c, 1.3, 0.2, 0.9), 1e-9);
  EXPECT_NEAR(i_rs(model, 1.3, 0.2, 0.9), i_rs(p, c, 1.3, 0.2, 0.9), 1e-9);
}

TEST(IRs, VanishesAtPerfectOverlapAndZeroSnr) {
  const Prior p = Prior::gaussian();
  const Channel c = Channel::linear(0.5);
  EXPECT_NEAR(i_rs(p, c, 2.0, 1.0, 0.0), 0.0, 1e-12);
}

TEST(IRs, SumWithFRsIsOutputEntropyTerm) {
  // i_rs + f_rs = alpha Psi_Pout(rho).
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Prior p = Prior::gauss_bernoulli(0.5);
  const Channel c = Channel::sign(0.2);
  const double rho = p.second_moment();
  for (int i = 0; i < 5; ++i) {
    const double alpha = 0.2 + 2.0 * u(rng), q = rho * u(rng), r = 10.0 * u(rng);
    EXPECT_NEAR(i_rs(p, c, alpha, q, r) + f_rs(p, c, alpha, q, r), alpha * psi_pout(c, rho, rho), 1e-10);
  }
}

TEST(Solve, PerceptronPerfectLearningAtAlphaTwo) {
  const ReplicaSolution s = solve(Prior::rademacher(), Channel::sign(), 2.0);
  EXPECT_NEAR(s.q_star, 1.0, 1e-4);
  EXPECT_NEAR(s.mmse, 0.0, 1e-4);
}

TEST(Solve, DoorUninformativeBelowOne) {
  const ReplicaSolution s = solve(Prior::rademacher(), Channel::door(kDoorK), 0.9);
  EXPECT_NEAR(s.q_star, 0.0, 1e-6);
  EXPECT_NEAR(s.gen_error, 1.0, 1e-6);
}

TEST(Solve, GaussianLinearQuadraticRoot) {
  const ReplicaSolution s = solve(Prior::gaussian(), Channel::linear(0.5), 2.0);
  const double q = gaussian_linear_q(2.0, 0.5);
  EXPECT_NEAR(s.q_star, q, 1e-7);
  EXPECT_NEAR(s.r_star, 2.0 / (0.5 + 1.0 - q), 1e-6);
  EXPECT_TRUE(s.unique);
  EXPECT_NEAR(s.mmse, 1.0 - q, 1e-7);
  EXPECT_NEAR(s.matrix_mmse, 1.0 - q * q, 1e-7);
}

TEST(Solve, GaussianLinearMutualInformationMatchesMarchenkoPastur) {
  // (1/n) I = (1/2) E ln(1 + alpha x / Delta), x ~ Marchenko-Pastur with ratio c = 1/alpha.
  const double alpha = 2.0, delta = 0.5, c = 1.0 / alpha;
  const double a = std::pow(1.0 - std::sqrt(c), 2), b = std::pow(1.0 + std::sqrt(c), 2);
  const double info = trapezoid(
      [&](double th) {
        const double x = a + (b - a) * (1.0 - std::cos(th)) / 2.0;
        const double dx = (b - a) * std::sin(th) / 2.0;
        const double dens = std::sqrt(std::max((b - x) * (x - a), 0.0)) / (2.0 * std::numbers::pi * c * x);
        return dens * dx * 0.5 * std::log1p(alpha * x / delta);
      },
      0.0, std::numbers::pi);
  const ReplicaSolution s = solve(Prior::gaussian(), Channel::linear(delta), alpha);
  EXPECT_NEAR(s.mutual_information, info, 1e-7);
}

TEST(Solve, RoutesAgreeAndErrorsInRange) {
  struct Case {
    Prior p;
    Channel c;
    double alpha;
  };
  const std::vector<Case> cases = {
      {Prior::rademacher(), Channel::sign(), 1.0},   {Prior::rademacher(), Channel::sign(), 1.3},
      {Prior::gauss_bernoulli(0.5), Channel::linear(0.01), 0.6},
      {Prior::rademacher(), Channel::door(kDoorK), 1.2}, {Prior::gaussian(), Channel::abs(0.1), 1.5},
  };
  for (const Case& k : cases) {
    const ReplicaSolution s = solve(k.p, k.c, k.alpha);
    const double rho = k.p.second_moment();
    EXPECT_NEAR(s.free_entropy, s.direct_f, 1e-5) << k.c.describe() << " alpha=" << k.alpha;
    EXPECT_GE(s.mmse, 0.0);
    EXPECT_LE(s.mmse, rho);
    EXPECT_GE(s.matrix_mmse, 0.0);
    EXPECT_LE(s.matrix_mmse, rho * rho);
    EXPECT_GE(s.gen_error, k.c.delta() - 1e-12);
    bool found = false;
    for (const ReplicaPoint& g : s.gamma_set) found |= std::abs(g.q - s.q_star) < 1e-6 * rho;
    EXPECT_TRUE(found) << k.c.describe();
  }
}

TEST(Solve, GammaMembersAreStationary) {
  SEModel model(Prior::rademacher(), Channel::sign(0.05));
  const double alpha = 1.4;
  for (const ReplicaPoint& g : gamma_set(model, alpha)) {
    if (g.recovery) continue;
    EXPECT_NEAR(g.q, model.q_of_r(g.r), 1e-6 * model.rho());
    EXPECT_NEAR(g.r, model.r_of_q(alpha, g.q), 1e-6 * std::max(1.0, g.r));
    EXPECT_NEAR(g.f_value, f_rs(model, alpha, g.q, g.r), 1e-9);
  }
}

TEST(Solve, SupInfDuality) {
  for (double alpha : {0.7, 1.3, 2.0}) {
    SEModel model(Prior::rademacher(), Channel::sign());
    EXPECT_NEAR(sup_q_inf_r(model, alpha).f, sup_r_inf_q(model, alpha).f, 1e-6) << alpha;
  }
  SEModel gb(Prior::gauss_bernoulli(0.3), Channel::linear(0.05));
  EXPECT_NEAR(sup_q_inf_r(gb, 0.5).f, sup_r_inf_q(gb, 0.5).f, 1e-6);
}

TEST(Solve, RejectsNonPositiveAlpha) {
  EXPECT_THROW(solve(Prior::gaussian(), Channel::sign(), 0.0), DomainError);
}

TEST(GeneralizationError, Examples) {
  EXPECT_NEAR(generalization_error(Channel::linear(0.3), 1.0, 1.0), 0.3, 1e-12);
  EXPECT_NEAR(generalization_error(Channel::sign(), 1.0, 0.0), 1.0, 1e-12);
  EXPECT_NEAR(generalization_error(Channel::door(kDoorK), 1.0, 0.0), 1.0, 1e-4);
}

TEST(GeneralizationError, SignAgainstErfExpectation) {
  for (double q : {0.2, 0.7}) {
    const double a = std::sqrt(q / (2.0 * (1.0 - q)));
    const double oracle = 1.0 - gauss_expect([a](double v) { return std::pow(std::erf(a * v), 2); });
    EXPECT_NEAR(generalization_error(Channel::sign(), 1.0, q), oracle, 1e-9);
  }
}

TEST(GeneralizationError, ClosedFormsMatchGeneric) {
  const std::vector<Channel> channels = {Channel::linear(0.2), Channel::sign(),     Channel::door(kDoorK),
                                         Channel::relu(0.1),   Channel::abs(0.05), Channel::sigmoid(2.0)};
  for (double rho : {1.0, 0.3})
    for (const Channel& c : channels)
      for (double frac : {0.0, 0.5, 0.99}) {
        const std::optional<double> closed = generalization_error_closed_form(c, rho, frac * rho);
        ASSERT_TRUE(closed.has_value()) << c.describe();
        EXPECT_NEAR(*closed, generalization_error(c, rho, frac * rho), 1e-6) << c.describe() << " q/rho=" << frac;
      }
}

TEST(GeneralizationError, NonincreasingInQ) {
  for (const Channel& c : {Channel::sign(), Channel::relu(0.1), Channel::abs(0.0)}) {
    double prev = INFINITY;
    for (int i = 0; i <= 10; ++i) {
      const double e = generalization_error(c, 1.0, i / 10.0);
      EXPECT_LE(e, prev + 1e-10) << c.describe();
      prev = e;
    }
  }
}

TEST(GeneralizationError, RejectsQOutOfRange) {
  EXPECT_THROW(generalization_error(Channel::sign(), 1.0, 1.5), DomainError);
}

TEST(DenoisingError, LinearClosedForm) {
  EXPECT_NEAR(denoising_error(Channel::linear(1.0), 1.0, 0.5), 1.0 / 3.0, 1e-8);
  for (double q : {0.0, 0.3, 0.9})
    EXPECT_NEAR(denoising_error(Channel::linear(0.4), 1.0, q), 0.4 * (1.0 - q) / (1.4 - q), 1e-8);
}

TEST(DenoisingError, BoundedAndNonincreasing) {
  for (const Channel& c : {Channel::linear(0.5), Channel::sign(0.2)}) {
    double prev = INFINITY;
    for (int i = 0; i < 10; ++i) {
      const double e = denoising_error(c, 1.0, i / 10.0);
      EXPECT_GE(e, -1e-10);
      EXPECT_LE(e, 1.0 + 1e-10);  // E[phi^2] = 1 for both at rho = 1
      EXPECT_LE(e, prev + 1e-8) << c.describe();
      prev = e;
    }
  }
}

TEST(DenoisingError, RejectsNoiselessChannel) {
  EXPECT_THROW(denoising_error(Channel::sign(), 1.0, 0.5), DomainError);
}
