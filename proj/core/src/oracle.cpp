#include "glmphase/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "glmphase/errors.hpp"
#include "glmphase/numerics.hpp"
#include "glmphase/special.hpp"

namespace glmphase {

namespace {

constexpr double kNegligibleProb = 1e-15;
constexpr double kRoundoffGap = 1e-12;

// Welford accumulator.
struct Stats {
  double mean_ = 0.0;
  double m2 = 0.0;
  long count = 0;

  void add(double x) {
    ++count;
    double d = x - mean_;
    mean_ += d / count;
    m2 += d * (x - mean_);
  }
  double mean() const { return mean_; }
  double stderr_of_mean() const {
    if (count < 2) return 0.0;
    return std::sqrt(std::max(m2, 0.0) / (count - 1) / count);
  }
};

std::uint64_t checked_configurations(std::size_t support, int n) {
  if (n < 1 || n > kMaxExactDimension)
    throw DomainError("exact_posterior: n must lie in [1, " + std::to_string(kMaxExactDimension) + "]");
  std::uint64_t total = 1;
  for (int i = 0; i < n; ++i) {
    total *= support;
    if (total > kMaxExactConfigurations)
      throw DomainError("exact_posterior: support^n exceeds 2^20 configurations");
  }
  return total;
}

}  // namespace

double ExactPosterior::value(std::size_t c, int i, int n) const {
  const std::size_t k = atoms.size();
  for (int j = n - 1; j > i; --j) c /= k;
  return atoms[c % k];
}

ExactPosterior exact_posterior(const Instance& inst) {
  if (!inst.prior.is_discrete())
    throw DomainError("exact_posterior: prior must have finite support");
  if (inst.channel.is_noiseless_continuous())
    throw DomainError("exact_posterior: channel has no density");
  const int n = inst.n();
  const int m = inst.m();
  const std::size_t k = inst.prior.atoms().size();
  const std::uint64_t total = checked_configurations(k, n);

  ExactPosterior post;
  post.support_size = static_cast<int>(k);
  post.atoms = inst.prior.atoms();
  std::vector<double> log_prior_atom(k);
  for (std::size_t a = 0; a < k; ++a) log_prior_atom[a] = std::log(inst.prior.atom_probs()[a]);

  std::vector<double> logw(total);
  Eigen::VectorXd x(n);
  std::vector<int> digits(n);
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  for (std::uint64_t c = 0; c < total; ++c) {
    std::uint64_t rem = c;
    double lw = 0.0;
    for (int i = n - 1; i >= 0; --i) {
      digits[i] = static_cast<int>(rem % k);
      rem /= k;
      x[i] = post.atoms[digits[i]];
      lw += log_prior_atom[digits[i]];
    }
    Eigen::VectorXd z = inst.phi * x / sqrt_n;
    for (int mu = 0; mu < m && std::isfinite(lw); ++mu)
      lw += std::log(density(inst.channel, inst.y[mu], z[mu]));
    logw[c] = lw;
  }
  double lmax = *std::max_element(logw.begin(), logw.end());
  if (!std::isfinite(lmax)) throw EvidenceUnderflowError("exact_posterior: zero evidence");
  double acc = 0.0;
  for (double lw : logw) acc += std::exp(lw - lmax);
  post.log_evidence = lmax + std::log(acc);

  post.posterior_probs.resize(total);
  post.posterior_means = Eigen::VectorXd::Zero(n);
  for (std::uint64_t c = 0; c < total; ++c) {
    double p = std::exp(logw[c] - post.log_evidence);
    post.posterior_probs[c] = p;
    if (p == 0.0) continue;
    for (int i = 0; i < n; ++i) post.posterior_means[i] += p * post.value(c, i, n);
  }
  post.exact_mmse = (inst.x_star - post.posterior_means).squaredNorm() / n;
  return post;
}

double overlap_statistic(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s / static_cast<double>(a.size());
}

NishimoriCheck nishimori_check(const Prior& prior, const Channel& channel, int n, double alpha,
                               const ReplicaStatistic& statistic, int samples, std::uint64_t seed) {
  if (samples < 2) throw DomainError("nishimori_check: samples must be >= 2");
  Stats lhs, rhs, diff;
  std::vector<double> star(n);
  for (int s = 0; s < samples; ++s) {
    Instance inst = generate_instance(prior, channel, n, alpha, mix_seed(seed, s));
    ExactPosterior post = exact_posterior(inst);
    std::vector<std::vector<double>> configs;
    std::vector<double> probs;
    for (std::size_t c = 0; c < post.posterior_probs.size(); ++c) {
      if (post.posterior_probs[c] < kNegligibleProb) continue;
      std::vector<double> x(n);
      for (int i = 0; i < n; ++i) x[i] = post.value(c, i, n);
      configs.push_back(std::move(x));
      probs.push_back(post.posterior_probs[c]);
    }
    for (int i = 0; i < n; ++i) star[i] = inst.x_star[i];
    double l = 0.0, r = 0.0;
    for (std::size_t a = 0; a < configs.size(); ++a) {
      r += probs[a] * statistic(configs[a], star);
      for (std::size_t b = 0; b < configs.size(); ++b)
        l += probs[a] * probs[b] * statistic(configs[a], configs[b]);
    }
    lhs.add(l);
    rhs.add(r);
    diff.add(l - r);
  }
  NishimoriCheck out;
  out.lhs = lhs.mean();
  out.rhs = rhs.mean();
  out.lhs_stderr = lhs.stderr_of_mean();
  out.rhs_stderr = rhs.stderr_of_mean();
  double se = diff.stderr_of_mean();
  double gap = std::abs(diff.mean());
  // Gaps at roundoff level count as exact agreement.
  if (gap <= kRoundoffGap * (1.0 + std::abs(out.lhs)))
    out.z_score = 0.0;
  else
    out.z_score = se > 0.0 ? gap / se : std::numeric_limits<double>::infinity();
  return out;
}

MonteCarloEstimate mc_psi_p0(const Prior& prior, double r, int samples, std::uint64_t seed) {
  if (samples < 100) throw DomainError("mc_psi_p0: samples must be >= 100");
  if (!(r >= 0.0)) throw DomainError("mc_psi_p0: r must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sr = std::sqrt(r);
  Stats st;
  for (int s = 0; s < samples; ++s) {
    double x0 = prior.draw(rng);
    double y0 = sr * x0 + normal(rng);
    st.add(tilted_moments(prior, sr * y0, r).log_norm);
  }
  return {st.mean(), st.stderr_of_mean()};
}

MonteCarloEstimate mc_psi_pout(const Channel& channel, double q, double rho, int samples,
                               std::uint64_t seed) {
  if (samples < 100) throw DomainError("mc_psi_pout: samples must be >= 100");
  if (!(q >= 0.0 && q < rho)) throw DomainError("mc_psi_pout: q must lie in [0, rho)");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sq = std::sqrt(q), sv = std::sqrt(rho - q);
  Stats st;
  for (int s = 0; s < samples; ++s) {
    double v = normal(rng);
    double w = normal(rng);
    double y = channel.draw(sq * v + sv * w, rng);
    st.add(output_posterior(channel, y, sq * v, rho - q).log_z);
  }
  return {st.mean(), st.stderr_of_mean()};
}

}  // namespace glmphase
