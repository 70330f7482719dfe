#pragma once

// Teacher-student instances and generalized approximate message passing.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "glmphase/channels.hpp"
#include "glmphase/numerics.hpp"
#include "glmphase/priors.hpp"

namespace glmphase {

struct Instance {
  Eigen::MatrixXd phi;  // m x n, iid N(0, 1)
  Eigen::VectorXd x_star;
  Eigen::VectorXd y;
  Prior prior;
  Channel channel;
  std::uint64_t seed;

  int n() const { return static_cast<int>(x_star.size()); }
  int m() const { return static_cast<int>(y.size()); }
  double alpha() const { return static_cast<double>(m()) / n(); }
};

/// m = round(alpha n). Phi, X* and the labels use independent streams of `seed`;
/// label mu is sample_label(channel, z_mu, mix_seed(label_seed, mu)).
Instance generate_instance(const Prior& prior, const Channel& channel, int n, double alpha,
                           std::uint64_t seed);

/// The Gaussian sensing matrix that generate_instance draws for (m, n, seed).
Eigen::MatrixXd generate_matrix(int m, int n, std::uint64_t seed);

/// Text container: header with n, m, seed, prior and channel descriptors, then
/// X*, Y and optionally Phi (regenerated from the seed when omitted).
void write_instance(std::ostream& out, const Instance& inst, bool include_phi = true);
Instance read_instance(std::istream& in);

/// Estimator of the input precision lambda. Both agree in expectation under the
/// Nishimori identity; the squared form freezes wrong coordinates at finite n
/// once the variances collapse in noiseless problems.
enum class LambdaRule {
  OutputDerivative,  // lambda = -alpha mean(d g / d omega)
  OutputSquare,      // lambda = alpha mean(g^2)
};

struct GampOptions {
  int max_iter = 500;
  double tol = 1e-7;  // on mean |x_hat^t - x_hat^{t-1}|
  double damping = 0.0;
  /// Assumed-channel asymmetry. Unset means 0 for non-even channels, 1e-4 * K for
  /// Door and 1e-4 for Abs.
  std::optional<double> channel_epsilon;
  std::uint64_t seed = 0;  // jitter of the initial estimate
  bool retry_with_damping = true;
  LambdaRule lambda_rule = LambdaRule::OutputDerivative;
};

struct GampState;
/// Called after every input step with the updated state.
using GampObserver = std::function<void(const GampState&)>;

struct GampState {
  Eigen::VectorXd x_hat;
  Eigen::VectorXd v;
  Eigen::VectorXd omega;
  Eigen::VectorXd g;
  double V = 0.0;
  double lambda = 0.0;
  int t = 0;
};

struct GampRun {
  Eigen::VectorXd x_hat;
  Eigen::VectorXd v;
  std::vector<double> overlap_seq;  // x_hat^t . X* / n, t = 0, 1, ...
  std::vector<double> norm_seq;     // |x_hat^t|^2 / n
  std::vector<double> mse_seq;      // |x_hat^t - X*|^2 / n
  bool converged = false;
  int iterations = 0;
  double damping_used = 0.0;
  GampState final_state;
};

double default_channel_epsilon(const Channel& channel);

/// Runs GAMP with the prior denoiser and the output denoiser of the assumed
/// channel (the instance channel with the epsilon perturbation). On divergence
/// it retries once with damping 0.5 when allowed; otherwise throws DivergenceError.
GampRun gamp_run(const Instance& inst, const GampOptions& opts = {},
               const GampObserver& observer = {});

/// Posterior-mean label for a new row under the Gaussian surrogate
/// N(phi_new . x_hat / sqrt(n), rho - q_t) for the pre-activation.
double gamp_predict(const Eigen::VectorXd& x_hat, double q_t, const Eigen::VectorXd& phi_new_row,
                    const Channel& channel, double rho);

/// Monte-Carlo mean of (Y_new - prediction)^2 over fresh rows of the same teacher.
struct McEstimate {
  double mean;
  double stderr_;
};
McEstimate empirical_generalization_error(const Instance& train, const Eigen::VectorXd& x_hat,
                                          double q_t, int n_test, std::uint64_t seed);

}  // namespace glmphase
