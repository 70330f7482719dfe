#include "glmphase/validation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <sstream>

#include "glmphase/channels.hpp"
#include "glmphase/errors.hpp"
#include "glmphase/gamp.hpp"
#include "glmphase/oracle.hpp"
#include "glmphase/priors.hpp"
#include "glmphase/replica.hpp"
#include "glmphase/state_evolution.hpp"

namespace glmphase {

namespace {

std::vector<Prior> test_priors() {
  return {Prior::gaussian(1.0), Prior::rademacher(0.5), Prior::gauss_bernoulli(0.2),
          Prior::two_point(1.0, 0.0, 0.3)};
}

std::vector<Channel> test_channels() {
  return {Channel::linear(0.5), Channel::sign(),  Channel::door(0.67449),
          Channel::abs(),       Channel::relu(0.1), Channel::sigmoid(2.0)};
}

CheckResult make(const std::string& name, double value, double tol, const std::string& detail) {
  return {name, value <= tol, value, tol, detail};
}

CheckResult guarded(const std::string& name, const std::function<CheckResult()>& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    return {name, false, INFINITY, 0.0, std::string("exception: ") + e.what()};
  }
}

CheckResult prior_derivatives() {
  double worst = 0.0;
  std::string where;
  for (const Prior& p : test_priors()) {
    for (double r : {0.3, 1.0, 4.0}) {
      const double h = 1e-4 * std::max(r, 1.0);
      const double fd = (psi_p0(p, r + h) - psi_p0(p, r - h)) / (2.0 * h);
      const double an = psi_p0_prime(p, r);
      const double rel = std::abs(an - fd) / std::max(std::abs(an), 1e-12);
      if (rel > worst) {
        worst = rel;
        where = p.describe() + " r=" + std::to_string(r);
      }
    }
  }
  return make("prior psi' vs finite difference", worst, 1e-4, "worst at " + where);
}

CheckResult channel_derivatives() {
  double worst = 0.0;
  std::string where;
  const double rho = 1.0, h = 1e-4;
  for (const Channel& c : test_channels()) {
    for (double q : {0.2, 0.6}) {
      const double fd = (psi_pout(c, q + h, rho) - psi_pout(c, q - h, rho)) / (2.0 * h);
      const double an = psi_pout_prime(c, q, rho);
      const double rel = std::abs(an - fd) / std::max(std::abs(an), 1e-12);
      if (rel > worst) {
        worst = rel;
        where = c.describe() + " q=" + std::to_string(q);
      }
    }
  }
  return make("channel Psi' vs finite difference", worst, 1e-4, "worst at " + where);
}

CheckResult convexity() {
  double worst = 0.0;  // largest negative second difference
  std::string where = "none";
  for (const Prior& p : test_priors()) {
    std::vector<double> v;
    for (int k = 0; k <= 12; ++k) v.push_back(psi_p0(p, 0.5 * k));
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
      const double d2 = v[k + 1] - 2.0 * v[k] + v[k - 1];
      if (-d2 > worst) {
        worst = -d2;
        where = p.describe();
      }
    }
  }
  for (const Channel& c : test_channels()) {
    std::vector<double> v;
    for (int k = 0; k <= 9; ++k) v.push_back(psi_pout(c, 0.1 * k, 1.0));
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
      const double d2 = v[k + 1] - 2.0 * v[k] + v[k - 1];
      if (-d2 > worst) {
        worst = -d2;
        where = c.describe();
      }
    }
  }
  return make("convexity of psi_P0(r) and Psi_Pout(q)", worst, 1e-9, "worst at " + where);
}

struct Case {
  Prior prior;
  Channel channel;
  double alpha;
};

std::vector<Case> optimizer_cases() {
  return {{Prior::gaussian(1.0), Channel::linear(0.5), 1.0},
          {Prior::rademacher(), Channel::sign(), 1.0},
          {Prior::rademacher(), Channel::sign(), 1.6},
          {Prior::gauss_bernoulli(0.5), Channel::linear(0.01), 0.6}};
}

std::string label(const Case& c) {
  std::ostringstream out;
  out << c.prior.describe() << " + " << c.channel.describe() << " alpha=" << c.alpha;
  return out.str();
}

CheckResult duality() {
  double worst = 0.0;
  std::string where;
  for (const Case& c : optimizer_cases()) {
    SEModel model(c.prior, c.channel);
    const double gap = std::abs(sup_q_inf_r(model, c.alpha).f - sup_r_inf_q(model, c.alpha).f);
    if (gap >= worst) {
      worst = gap;
      where = label(c);
    }
  }
  return make("sup_q inf_r f_RS = sup_r inf_q f_RS", worst, 1e-6, "worst at " + where);
}

CheckResult stationarity() {
  double worst = 0.0;
  std::string where;
  std::string bounds;
  for (const Case& c : optimizer_cases()) {
    SEModel model(c.prior, c.channel);
    const ReplicaSolution sol = solve(model, c.alpha);
    const double rho = model.rho();
    double res = std::abs(sol.q_star - 2.0 * model.psi_in_prime(sol.r_star)) / rho;
    if (sol.r_star < kSnrCap)
      res = std::max(res, std::abs(sol.r_star - 2.0 * c.alpha * model.psi_out_prime(sol.q_star)) /
                              std::max(sol.r_star, 1.0));
    if (res >= worst) {
      worst = res;
      where = label(c);
    }
    if (!(sol.mmse >= 0.0 && sol.mmse <= rho) || !(sol.matrix_mmse >= 0.0 && sol.matrix_mmse <= rho * rho) ||
        sol.gen_error < c.channel.delta() - 1e-12)
      bounds += " bounds violated at " + label(c) + ";";
  }
  CheckResult r = make("Gamma stationarity residuals", worst, 1e-6, "worst at " + where + bounds);
  r.passed = r.passed && bounds.empty();
  return r;
}

CheckResult nishimori(bool quick, std::uint64_t seed) {
  const int samples = quick ? 400 : 2000;
  double worst = 0.0;
  std::string detail;
  const std::vector<Case> cases = {{Prior::rademacher(), Channel::linear(0.5), 1.5},
                                   {Prior::rademacher(), Channel::sign(), 2.0}};
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const NishimoriCheck nc = nishimori_check(cases[k].prior, cases[k].channel, 8, cases[k].alpha,
                                              overlap_statistic, samples, mix_seed(seed, k));
    worst = std::max(worst, nc.z_score);
    std::ostringstream out;
    out << label(cases[k]) << ": " << nc.lhs << " vs " << nc.rhs << " (z=" << nc.z_score << "); ";
    detail += out.str();
  }
  return make("Nishimori overlap identity at n=8", worst, 3.0, detail);
}

CheckResult monte_carlo(bool quick, std::uint64_t seed) {
  const int samples = quick ? 10000 : 40000;
  double worst = 0.0;
  std::string where;
  auto consider = [&](double exact, const MonteCarloEstimate& mc, const std::string& what) {
    const double z = mc.stderr_ > 0.0 ? std::abs(mc.estimate - exact) / mc.stderr_
                                      : (std::abs(mc.estimate - exact) < 1e-10 ? 0.0 : INFINITY);
    if (z >= worst) {
      worst = z;
      where = what;
    }
  };
  std::uint64_t stream = 0;
  const std::vector<std::pair<Prior, double>> priors = {
      {Prior::gaussian(1.0), 1.0}, {Prior::rademacher(), 2.0}, {Prior::gauss_bernoulli(0.2), 3.0}};
  for (const auto& [p, r] : priors)
    consider(psi_p0(p, r), mc_psi_p0(p, r, samples, mix_seed(seed, stream++)), p.describe());
  const std::vector<std::pair<Channel, double>> channels = {
      {Channel::door(0.67449), 0.3}, {Channel::linear(0.5), 0.4}, {Channel::sign(), 0.5}};
  for (const auto& [c, q] : channels)
    consider(psi_pout(c, q, 1.0), mc_psi_pout(c, q, 1.0, samples, mix_seed(seed, stream++)),
             c.describe());
  return make("quadrature free entropies inside Monte-Carlo 3 sigma", worst, 3.0, "worst z at " + where);
}

CheckResult closed_forms() {
  double worst = 0.0;
  std::string where;
  const std::vector<Channel> channels = {Channel::linear(0.1), Channel::sign(),
                                         Channel::door(0.67449), Channel::abs(),
                                         Channel::relu(0.05), Channel::sigmoid(3.0)};
  for (double rho : {1.0, 0.5}) {
    for (const Channel& c : channels) {
      for (double q : {0.0, 0.5 * rho, 0.99 * rho}) {
        const double generic = generalization_error(c, rho, q);
        const double closed = generalization_error_closed_form(c, rho, q).value();
        const double err = std::abs(generic - closed);
        if (err >= worst) {
          worst = err;
          where = c.describe() + " rho=" + std::to_string(rho) + " q=" + std::to_string(q);
        }
      }
    }
  }
  return make("generalization error: quadrature vs closed forms", worst, 1e-6, "worst at " + where);
}

CheckResult tracking(bool quick, std::uint64_t seed) {
  const int n = quick ? 500 : 2000;
  const int seeds = quick ? 3 : 10;
  double worst = 0.0;
  std::string detail;
  const std::vector<Case> cases = {{Prior::gaussian(1.0), Channel::linear(0.1), 2.0},
                                   {Prior::rademacher(), Channel::sign(), 1.2}};
  for (std::size_t k = 0; k < cases.size(); ++k) {
    const Case& c = cases[k];
    SEModel model(c.prior, c.channel);
    const SETrajectory se = se_run(model, c.alpha, kUninformativeInit * model.rho());
    std::vector<double> mean_overlap(11, 0.0);
    for (int s = 0; s < seeds; ++s) {
      const Instance inst = generate_instance(c.prior, c.channel, n, c.alpha, mix_seed(seed, 100 * k + s));
      GampOptions opts;
      opts.seed = mix_seed(seed, 100 * k + s + 50);
      const GampRun run = gamp_run(inst, opts);
      for (int t = 0; t <= 10; ++t) {
        const std::size_t idx = std::min<std::size_t>(t, run.overlap_seq.size() - 1);
        mean_overlap[t] += run.overlap_seq[idx] / seeds;
      }
    }
    double dev = 0.0;
    for (int t = 0; t <= 10; ++t) {
      const std::size_t idx = std::min<std::size_t>(t, se.q_seq.size() - 1);
      dev = std::max(dev, std::abs(mean_overlap[t] - se.q_seq[idx]));
    }
    worst = std::max(worst, dev);
    detail += label(c) + ": max |overlap_t - q_t| = " + std::to_string(dev) + "; ";
  }
  return make("GAMP overlap tracks SE for t <= 10", worst, 0.05, detail);
}

CheckResult reproducibility(std::uint64_t seed) {
  const Prior p = Prior::rademacher();
  const Channel c = Channel::sign();
  const Instance a = generate_instance(p, c, 200, 1.5, seed);
  const Instance b = generate_instance(p, c, 200, 1.5, seed);
  GampOptions opts;
  opts.seed = seed;
  const GampRun ra = gamp_run(a, opts);
  const GampRun rb = gamp_run(b, opts);
  const auto ma = mc_psi_p0(Prior::gauss_bernoulli(0.3), 1.5, 1000, seed);
  const auto mb = mc_psi_p0(Prior::gauss_bernoulli(0.3), 1.5, 1000, seed);
  auto same = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return x.size() == y.size() &&
           std::memcmp(x.data(), y.data(), sizeof(double) * static_cast<std::size_t>(x.size())) == 0;
  };
  const bool ok = same(a.phi, b.phi) && same(a.y, b.y) && same(a.x_star, b.x_star) &&
                  same(ra.x_hat, rb.x_hat) && ra.overlap_seq == rb.overlap_seq &&
                  std::memcmp(&ma.estimate, &mb.estimate, sizeof(double)) == 0;
  CheckResult r{"bitwise-identical seeded reruns", ok, ok ? 0.0 : 1.0, 0.0,
                ok ? "instance, GAMP trajectory and MC estimate identical" : "mismatch"};
  return r;
}

}  // namespace

std::vector<CheckResult> property_suite(const ValidationOptions& opts) {
  std::vector<CheckResult> out;
  out.push_back(guarded("prior psi' vs finite difference", prior_derivatives));
  out.push_back(guarded("channel Psi' vs finite difference", channel_derivatives));
  out.push_back(guarded("convexity of psi_P0(r) and Psi_Pout(q)", convexity));
  out.push_back(guarded("sup_q inf_r f_RS = sup_r inf_q f_RS", duality));
  out.push_back(guarded("Gamma stationarity residuals", stationarity));
  out.push_back(guarded("Nishimori overlap identity at n=8", [&] { return nishimori(opts.quick, opts.seed); }));
  out.push_back(guarded("quadrature free entropies inside Monte-Carlo 3 sigma",
                        [&] { return monte_carlo(opts.quick, opts.seed); }));
  out.push_back(guarded("generalization error: quadrature vs closed forms", closed_forms));
  out.push_back(guarded("GAMP overlap tracks SE for t <= 10", [&] { return tracking(opts.quick, opts.seed); }));
  out.push_back(guarded("bitwise-identical seeded reruns", [&] { return reproducibility(opts.seed); }));
  return out;
}

}  // namespace glmphase
