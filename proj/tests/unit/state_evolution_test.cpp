#include <gtest/gtest.h>

#include <cmath>

#include "glmphase/errors.hpp"
#include "glmphase/state_evolution.hpp"

using namespace glmphase;

namespace {

constexpr double kDoorK = 0.67449;

double gaussian_linear_q(double alpha, double delta) {
  const double b = delta + 1.0 + alpha;
  return 0.5 * (b - std::sqrt(b * b - 4.0 * alpha));
}

}  // namespace

TEST(SeRun, EvenChannelStaysAtZero) {
  const SETrajectory t = se_run(Prior::rademacher(), Channel::door(kDoorK), 2.0, 0.0);
  EXPECT_TRUE(t.converged);
  for (double q : t.q_seq) EXPECT_EQ(q, 0.0);
  EXPECT_EQ(t.q_limit, 0.0);
}

TEST(SeRun, GaussianLinearQuadraticRoot) {
  const SETrajectory t = se_run(Prior::gaussian(), Channel::linear(0.5), 2.0, 1e-6);
  EXPECT_TRUE(t.converged);
  EXPECT_NEAR(t.q_limit, gaussian_linear_q(2.0, 0.5), 1e-9);
  EXPECT_EQ(t.q_seq.size(), t.r_seq.size() + 1);
}

TEST(SeRun, PerceptronRecoversAboveSpinodal) {
  SEModel model(Prior::rademacher(), Channel::sign());
  const SETrajectory t = se_run(model, 2.0, InitKind::Uninformative);
  EXPECT_EQ(t.init_kind, InitKind::Uninformative);
  EXPECT_NEAR(t.q_limit, 1.0, 1e-6);
  EXPECT_TRUE(reaches_recovery(model, 2.0));
  EXPECT_FALSE(reaches_recovery(model, 1.3));
}

TEST(SeRun, TrajectoryStaysInRangeAndIsMonotoneFromBelow) {
  SEModel model(Prior::gauss_bernoulli(0.5), Channel::sign(0.1));
  const SETrajectory t = se_run(model, 1.5, InitKind::Uninformative);
  for (std::size_t i = 0; i < t.q_seq.size(); ++i) {
    EXPECT_GE(t.q_seq[i], 0.0);
    EXPECT_LE(t.q_seq[i], model.rho());
    if (i > 0) {
      EXPECT_GE(t.q_seq[i], t.q_seq[i - 1] - 1e-12);
    }
  }
  for (double r : t.r_seq) EXPECT_GE(r, 0.0);
}

TEST(SeRun, ExhaustedBudgetReportsNonConvergence) {
  const SETrajectory t = se_run(Prior::gaussian(), Channel::linear(0.5), 2.0, 1e-6, {0.0, 1e-14, 3});
  EXPECT_FALSE(t.converged);
  EXPECT_EQ(t.q_seq.size(), 4u);
}

TEST(SeRun, RejectsOutOfRangeStart) {
  EXPECT_THROW(se_run(Prior::gaussian(), Channel::sign(), 1.0, 1.5), DomainError);
  EXPECT_THROW(se_run(Prior::gaussian(), Channel::sign(), 1.0, -0.1), DomainError);
}

TEST(SeRun, FixedPointsAreCriticalPoints) {
  const double tol = 1e-10;
  for (const auto& [prior, channel, alpha] :
       {std::tuple{Prior::rademacher(), Channel::sign(0.1), 1.2}, std::tuple{Prior::gaussian(), Channel::abs(0.1), 1.7},
        std::tuple{Prior::gauss_bernoulli(0.3), Channel::linear(0.01), 0.5}}) {
    SEModel model(prior, channel);
    for (InitKind init : {InitKind::Uninformative, InitKind::Informative}) {
      const SETrajectory t = se_run(model, alpha, init, {0.0, tol, 20000});
      if (!t.converged) continue;
      const double q = t.q_limit;
      EXPECT_NEAR(q, model.q_of_r(model.r_of_q(alpha, q)), 10 * tol + 1e-12 * model.rho())
          << channel.describe();
    }
  }
}

TEST(SeRun, DampingDoesNotMoveTheFixedPoint) {
  SEModel model(Prior::gauss_bernoulli(0.4), Channel::relu(0.05));
  std::vector<double> limits;
  for (double d : {0.0, 0.3, 0.7}) {
    const SETrajectory t = se_run(model, 1.0, InitKind::Uninformative, {d, 1e-11, 20000});
    ASSERT_TRUE(t.converged) << d;
    limits.push_back(t.q_limit);
  }
  EXPECT_NEAR(limits[1], limits[0], 1e-9);
  EXPECT_NEAR(limits[2], limits[0], 1e-9);
}

TEST(Stability, EscapeFromZeroMatchesAlphaC) {
  for (const Channel& c : {Channel::door(kDoorK), Channel::abs(0.01)}) {
    SEModel model(Prior::rademacher(), c);
    const double alpha_c = find_alpha_c(c, 1.0);
    const SETrajectory below = se_run(model, 0.95 * alpha_c, 1e-8, {0.0, 1e-13, 20000});
    const SETrajectory above = se_run(model, 1.05 * alpha_c, 1e-8, {0.0, 1e-13, 20000});
    EXPECT_LT(below.q_limit, 1e-7) << c.describe();
    EXPECT_GT(above.q_limit, 1e-3) << c.describe();
  }
}

TEST(SEModel, TabulatedDerivativeMatchesDirectQuadrature) {
  const Channel c = Channel::abs(0.01);
  SEModel table(Prior::rademacher(), c, {Tabulation::Always});
  SEModel direct(Prior::rademacher(), c, {Tabulation::Never});
  ASSERT_TRUE(table.tabulated());
  ASSERT_FALSE(direct.tabulated());
  for (double q : {1e-12, 1e-8, 1e-5, 1e-3, 0.02, 0.3, 0.8, 0.999}) {
    const double d = direct.psi_out_prime(q);
    EXPECT_NEAR(table.psi_out_prime(q) / d, 1.0, 1e-3) << "q=" << q;
  }
}

TEST(FindAlphaC, Examples) {
  EXPECT_NEAR(find_alpha_c(Channel::abs(1e-8), 1.0), 0.5, 1e-3);
  EXPECT_NEAR(find_alpha_c(Channel::door(kDoorK), 1.0), 1.36, 1e-2);
}

TEST(FindAlphaC, DoorDivergesAsThresholdVanishes) {
  double prev = 0.0;
  for (double K : {0.5, 0.2, 0.05, 0.01}) {
    const double a = find_alpha_c(Channel::door(K), 1.0);
    EXPECT_GT(a, prev) << K;
    prev = a;
  }
  // alpha_c grows like 1/K.
  EXPECT_GT(prev, 100.0);
}

TEST(FindAlphaC, RejectsNonEvenChannel) { EXPECT_THROW(find_alpha_c(Channel::sign(), 1.0), DomainError); }

TEST(FindAlphaAmp, NoSignChangeIsABracketError) {
  SEModel model(Prior::rademacher(), Channel::sign());
  EXPECT_THROW(find_alpha_amp(model, 1.8, 3.0), BracketError);
}

TEST(FindAlphaIt, ContinuousTransitionReturnsNone) {
  SEModel model(Prior::gaussian(), Channel::linear(0.5));
  const AlphaItResult r = find_alpha_it(model, 0.1, 3.0);
  EXPECT_FALSE(r.alpha.has_value());
  EXPECT_FALSE(r.diagnostic.empty());
}

TEST(InfOverR, GaussianClosedForm) {
  // inf_r r/2 - ln(1+r)/2 - r q/2 = q/2 + ln(1-q)/2 at r = q/(1-q).
  for (double q : {0.1, 0.5, 0.9}) {
    const auto [value, r] = inf_over_r(Prior::gaussian(), q);
    EXPECT_NEAR(value, q / 2 + std::log1p(-q) / 2, 1e-10);
    EXPECT_NEAR(r, q / (1 - q), 1e-6 * (1 + r));
  }
}

TEST(PhaseSweep, DoorRowsOrderedAndOrderInsensitive) {
  SweepSpec spec;
  spec.prior_at = [](double) { return Prior::rademacher(); };
  spec.channel_at = [](double K) { return Channel::door(K); };
  spec.params = {kDoorK, 1.0};
  spec.alpha_lo = 0.5;
  spec.alpha_hi = 2.5;
  const std::vector<TransitionReport> rows = phase_sweep(spec);
  ASSERT_EQ(rows.size(), 2u);
  for (const TransitionReport& row : rows) {
    EXPECT_TRUE(row.error.empty()) << row.error;
    ASSERT_TRUE(row.alpha_it && row.alpha_amp && row.alpha_c) << row.param;
    EXPECT_LE(*row.alpha_it, *row.alpha_amp);
    EXPECT_LE(row.bracket_width, spec.tol);
  }
  EXPECT_NEAR(*rows[0].alpha_it, 1.0, 5e-3);
  EXPECT_NEAR(*rows[0].alpha_amp, 1.566, 1e-2);

  spec.params = {1.0, kDoorK};
  spec.workers = 2;
  const std::vector<TransitionReport> reversed = phase_sweep(spec);
  ASSERT_EQ(reversed.size(), 2u);
  EXPECT_EQ(reversed[0].param, 1.0);
  EXPECT_EQ(*reversed[0].alpha_it, *rows[1].alpha_it);
  EXPECT_EQ(*reversed[1].alpha_amp, *rows[0].alpha_amp);
}

TEST(PhaseSweep, RowErrorsDoNotStopTheSweep) {
  SweepSpec spec;
  spec.prior_at = [](double) { return Prior::rademacher(); };
  spec.channel_at = [](double K) { return Channel::door(K); };
  spec.params = {kDoorK};
  spec.alpha_lo = 2.0;  // recovery already at alpha_lo: bracket error in-row
  spec.alpha_hi = 2.5;
  spec.want_it = false;
  const std::vector<TransitionReport> rows = phase_sweep(spec);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_FALSE(rows[0].alpha_amp.has_value());
  EXPECT_FALSE(rows[0].error.empty());
  EXPECT_TRUE(rows[0].alpha_c.has_value());
}
