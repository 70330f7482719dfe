#include "glmphase/gamp.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "glmphase/errors.hpp"

namespace glmphase {

namespace {

constexpr std::uint64_t kMatrixStream = 0;
constexpr std::uint64_t kSignalStream = 1;
constexpr std::uint64_t kLabelStream = 2;
constexpr double kJitterVariance = 1e-4;  // times rho
constexpr double kVarianceFloor = 1e-13;  // times rho
constexpr double kRetryDamping = 0.5;

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

GampRun run_once(const Instance& inst, const GampOptions& opts, double damping,
                 const GampObserver& observer) {
  const int n = inst.n();
  const int m = inst.m();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double alpha = inst.alpha();
  const double rho = inst.prior.second_moment();
  const Channel assumed =
      inst.channel.with_epsilon(opts.channel_epsilon.value_or(default_channel_epsilon(inst.channel)));

  GampState st;
  st.x_hat.resize(n);
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> jitter(0.0, std::sqrt(kJitterVariance * rho));
  for (int i = 0; i < n; ++i) st.x_hat[i] = inst.prior.mean() + jitter(rng);
  st.v = Eigen::VectorXd::Constant(n, inst.prior.variance());
  st.g = Eigen::VectorXd::Zero(m);
  st.omega = Eigen::VectorXd::Zero(m);

  GampRun run;
  run.damping_used = damping;
  auto record = [&] {
    run.overlap_seq.push_back(st.x_hat.dot(inst.x_star) / n);
    run.norm_seq.push_back(st.x_hat.squaredNorm() / n);
    run.mse_seq.push_back((st.x_hat - inst.x_star).squaredNorm() / n);
  };
  record();

  Eigen::VectorXd R(n);
  for (int t = 1; t <= opts.max_iter; ++t) {
    st.t = t;
    st.V = std::max(st.v.mean(), kVarianceFloor * rho);
    st.omega = inst.phi * st.x_hat / sqrt_n - st.V * st.g;
    double minus_dg = 0.0;
    for (int mu = 0; mu < m; ++mu) {
      try {
        OutputDenoiser od = gout(assumed, inst.y[mu], st.omega[mu], st.V);
        st.g[mu] = od.gout / std::sqrt(st.V);
        // Var[z | y] = V (E[w^2 | y] - E[w | y]^2)
        minus_dg += od.var_deficit / st.V;
      } catch (const EvidenceUnderflowError& e) {
        throw EvidenceUnderflowError(std::string(e.what()) + " (row " + std::to_string(mu) +
                                     ", iteration " + std::to_string(t) +
                                     "); try a larger damping or channel_epsilon");
      }
    }
    st.lambda = opts.lambda_rule == LambdaRule::OutputSquare ? alpha * st.g.squaredNorm() / m
                                                             : alpha * minus_dg / m;
    if (!std::isfinite(st.lambda) || !all_finite(st.omega))
      throw DivergenceError("gamp_run: non-finite output step at iteration " + std::to_string(t),
                            run.overlap_seq);
    if (st.lambda <= 0.0) {
      // Every label is explained with certainty: the estimate is a fixed point.
      run.converged = true;
      run.iterations = t;
      break;
    }
    R = st.x_hat + inst.phi.transpose() * st.g / (sqrt_n * st.lambda);
    Eigen::VectorXd x_new(n), v_new(n);
    for (int i = 0; i < n; ++i) {
      DenoiserOutput d = denoise(inst.prior, R[i], st.lambda);
      x_new[i] = d.mean;
      v_new[i] = d.variance;
    }
    if (!all_finite(x_new) || !all_finite(v_new))
      throw DivergenceError("gamp_run: non-finite input step at iteration " + std::to_string(t),
                            run.overlap_seq);
    if (damping > 0.0) x_new = (1.0 - damping) * x_new + damping * st.x_hat;
    double change = (x_new - st.x_hat).cwiseAbs().mean();
    st.x_hat = std::move(x_new);
    st.v = std::move(v_new);
    record();
    if (observer) observer(st);
    run.iterations = t;
    if (change < opts.tol) {
      run.converged = true;
      break;
    }
  }
  run.x_hat = st.x_hat;
  run.v = st.v;
  run.final_state = std::move(st);
  return run;
}

}  // namespace

Eigen::MatrixXd generate_matrix(int m, int n, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, kMatrixStream));
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd phi(m, n);
  for (int mu = 0; mu < m; ++mu)
    for (int i = 0; i < n; ++i) phi(mu, i) = normal(rng);
  return phi;
}

Instance generate_instance(const Prior& prior, const Channel& channel, int n, double alpha,
                           std::uint64_t seed) {
  if (n < 1) throw DomainError("generate_instance: n must be >= 1");
  if (!(alpha > 0.0)) throw DomainError("generate_instance: alpha must be > 0");
  const int m = static_cast<int>(std::lround(alpha * n));
  if (m < 1) throw DomainError("generate_instance: round(alpha n) must be >= 1");
  Instance inst{generate_matrix(m, n, seed), Eigen::VectorXd(n), Eigen::VectorXd(m), prior,
                channel.with_epsilon(0.0), seed};
  std::vector<double> x = sample(prior, static_cast<std::size_t>(n), mix_seed(seed, kSignalStream));
  for (int i = 0; i < n; ++i) inst.x_star[i] = x[i];
  Eigen::VectorXd z = inst.phi * inst.x_star / std::sqrt(static_cast<double>(n));
  const std::uint64_t label_seed = mix_seed(seed, kLabelStream);
  for (int mu = 0; mu < m; ++mu)
    inst.y[mu] = sample_label(inst.channel, z[mu], mix_seed(label_seed, mu));
  return inst;
}

double default_channel_epsilon(const Channel& channel) {
  switch (channel.kind()) {
    case ChannelKind::Door:
      return 1e-4 * channel.threshold();
    case ChannelKind::Abs:
      return 1e-4;
    default:
      return 0.0;
  }
}

GampRun gamp_run(const Instance& inst, const GampOptions& opts, const GampObserver& observer) {
  if (opts.max_iter < 1) throw DomainError("gamp_run: max_iter must be >= 1");
  if (!(opts.damping >= 0.0 && opts.damping < 1.0))
    throw DomainError("gamp_run: damping must lie in [0, 1)");
  if (opts.channel_epsilon && !(*opts.channel_epsilon >= 0.0))
    throw DomainError("gamp_run: channel_epsilon must be >= 0");
  try {
    return run_once(inst, opts, opts.damping, observer);
  } catch (const DivergenceError&) {
    if (!opts.retry_with_damping || opts.damping >= kRetryDamping) throw;
    return run_once(inst, opts, kRetryDamping, observer);
  }
}

double gamp_predict(const Eigen::VectorXd& x_hat, double q_t, const Eigen::VectorXd& phi_new_row,
                    const Channel& channel, double rho) {
  if (!(q_t >= 0.0 && q_t <= rho * (1.0 + 1e-12)))
    throw DomainError("gamp_predict: q_t must lie in [0, rho]");
  const double mu = phi_new_row.dot(x_hat) / std::sqrt(static_cast<double>(x_hat.size()));
  const double sigma = std::sqrt(std::max(rho - q_t, 0.0));
  if (sigma == 0.0) return channel.mean_output(mu);
  std::vector<double> cuts;
  for (double k : channel.kinks()) add_feature(cuts, (k - mu) / sigma, 1.0);
  if (channel.kind() == ChannelKind::Sigmoid)
    add_feature(cuts, -mu / sigma, 1.0 / (channel.slope() * sigma));
  return expect_normal([&](double w) { return channel.mean_output(mu + sigma * w); }, cuts);
}

McEstimate empirical_generalization_error(const Instance& train, const Eigen::VectorXd& x_hat,
                                          double q_t, int n_test, std::uint64_t seed) {
  if (n_test < 1) throw DomainError("empirical_generalization_error: n_test must be >= 1");
  const int n = train.n();
  const double rho = train.prior.second_moment();
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  std::mt19937_64 rng(mix_seed(seed, kMatrixStream));
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::uint64_t label_seed = mix_seed(seed, kLabelStream);
  Eigen::VectorXd row(n);
  double sum = 0.0, sum_sq = 0.0;
  for (int k = 0; k < n_test; ++k) {
    for (int i = 0; i < n; ++i) row[i] = normal(rng);
    double y = sample_label(train.channel, row.dot(train.x_star) / sqrt_n, mix_seed(label_seed, k));
    double e = y - gamp_predict(x_hat, q_t, row, train.channel, rho);
    sum += e * e;
    sum_sq += e * e * e * e;
  }
  double mean = sum / n_test;
  double var = n_test > 1 ? std::max(sum_sq / n_test - mean * mean, 0.0) * n_test / (n_test - 1) : 0.0;
  return {mean, std::sqrt(var / n_test)};
}

}  // namespace glmphase
