#pragma once

// State evolution q^{t+1} = 2 psi'_P0(r^t), r^t = 2 alpha Psi'_Pout(q^t) and the
// phase-transition finders built on it.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "glmphase/channels.hpp"
#include "glmphase/numerics.hpp"
#include "glmphase/priors.hpp"

namespace glmphase {

/// Uninformative start q0 = kUninformativeInit * rho.
inline constexpr double kUninformativeInit = 1e-6;
/// Informative start q0 = rho (1 - kInformativeGap).
inline constexpr double kInformativeGap = 1e-6;
/// Recovery is declared when q > rho (1 - kRecoveryGap).
inline constexpr double kRecoveryGap = 1e-4;

enum class Tabulation { Auto, Always, Never };

struct SEModelOptions {
  /// Auto tabulates Psi'_Pout for channels without a one-dimensional evaluation
  /// (noisy or continuous piecewise channels and Sigmoid).
  Tabulation tabulation = Tabulation::Auto;
  /// Table nodes are uniform in s = -ln(1 - q/rho) on [0, table_max_s].
  double table_step = 0.1;
  double table_max_s = 23.0;
};

/// A (prior, channel) pair with the alpha-independent pieces of the
/// replica potential cached. Copies share the caches; safe to use concurrently.
class SEModel {
 public:
  SEModel(Prior prior, Channel channel, SEModelOptions opts = {});

  const Prior& prior() const noexcept { return prior_; }
  const Channel& channel() const noexcept { return channel_; }
  double rho() const noexcept { return prior_.second_moment(); }
  bool tabulated() const noexcept;

  /// Psi'_Pout(q; rho); +infinity at q = rho.
  double psi_out_prime(double q) const;
  double psi_out(double q) const;
  double psi_in_prime(double r) const;
  double psi_in(double r) const;

  /// r = 2 alpha Psi'(q), clipped to kSnrCap.
  double r_of_q(double alpha, double q) const;
  /// q = 2 psi'(r).
  double q_of_r(double r) const;

  /// Values of q (ascending, ending at rho) and Psi_Pout on them, computed once.
  struct PotentialGrid {
    std::vector<double> q;
    std::vector<double> psi_out;
    std::vector<double> inf_in;  // inf_r psi(r) - r q / 2
    std::vector<double> argmin_r;
  };
  const PotentialGrid& potential_grid(int points) const;

 private:
  struct Cache;
  Prior prior_;
  Channel channel_;
  std::shared_ptr<Cache> cache_;
};

/// inf_{r >= 0} psi_P0(r) - r q / 2 and its minimizer (r = kSnrCap when saturated).
std::pair<double, double> inf_over_r(const Prior& prior, double q);

enum class InitKind { Uninformative, Informative, Custom };

struct SETrajectory {
  std::vector<double> q_seq;
  std::vector<double> r_seq;
  bool converged = false;
  double q_limit = 0.0;
  InitKind init_kind = InitKind::Custom;
};

SETrajectory se_run(const SEModel& model, double alpha, double q0,
                    const FixedPointOptions& opts = {});
SETrajectory se_run(const SEModel& model, double alpha, InitKind init,
                    const FixedPointOptions& opts = {});
SETrajectory se_run(const Prior& prior, const Channel& channel, double alpha, double q0,
                    const FixedPointOptions& opts = {});

/// Whether SE from the uninformative start reaches q > rho (1 - kRecoveryGap).
bool reaches_recovery(const SEModel& model, double alpha, int max_iter = 200000);

/// Spinodal: bisection on reaches_recovery over [alpha_lo, alpha_hi].
double find_alpha_amp(const SEModel& model, double alpha_lo, double alpha_hi, double tol = 1e-3);

struct AlphaItResult {
  std::optional<double> alpha;
  std::string diagnostic;
};

/// First-order transition where the informative Gamma branch overtakes every
/// non-informative one in free entropy.
AlphaItResult find_alpha_it(const SEModel& model, double alpha_lo, double alpha_hi,
                            double tol = 1e-3);

/// Noiseless limit of alpha_IT for continuous channels. Both Gamma branches
/// have free entropy kappa ln(1/Delta) / 2 + O(1) with a branch-dependent
/// kappa, so the limit is the root in alpha of the log-slope of
/// f_recovery - f_other between two small noise levels. The slope is sampled
/// at the finite-Delta threshold and one step above it, then the root is
/// extrapolated linearly.
struct NoiselessItEstimate {
  double alpha = 0.0;
  double delta_hi = 0.0;
  double delta_lo = 0.0;
  double alpha_at_delta = 0.0;       // finite-Delta alpha_IT at delta_hi
  std::vector<double> sample_alphas;
  std::vector<double> slopes;        // kappa at each sample alpha
};
NoiselessItEstimate find_alpha_it_noiseless(const Prior& prior,
                                            const std::function<Channel(double)>& channel_at,
                                            double delta_hi, double delta_lo, double alpha_lo,
                                            double alpha_hi, double tol = 1e-4);

/// alpha_c = 1 / stability_integral. Throws DomainError if the integral is not positive.
double find_alpha_c(const Channel& channel, double rho);

struct TransitionReport {
  double param = 0.0;
  std::optional<double> alpha_it;
  std::optional<double> alpha_amp;
  std::optional<double> alpha_c;
  double bracket_width = 0.0;
  std::string error;
};

struct SweepSpec {
  std::function<Prior(double)> prior_at;
  std::function<Channel(double)> channel_at;
  std::vector<double> params;
  double alpha_lo = 0.05;
  double alpha_hi = 3.0;
  double tol = 1e-3;
  bool want_it = true;
  bool want_amp = true;
  /// Noise levels for find_alpha_it_noiseless when the channel is noiseless and continuous.
  double noiseless_delta_hi = 1e-8;
  double noiseless_delta_lo = 1e-9;
  int workers = 1;
};

/// One row per parameter; per-row failures land in TransitionReport::error.
/// Noiseless continuous channels get alpha_IT from find_alpha_it_noiseless.
std::vector<TransitionReport> phase_sweep(const SweepSpec& spec);

}  // namespace glmphase
