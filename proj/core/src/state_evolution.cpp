#include "glmphase/state_evolution.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/math/interpolators/barycentric_rational.hpp>

#include "glmphase/errors.hpp"
#include "glmphase/replica.hpp"

namespace glmphase {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kTableRefinements = 30;

bool wants_table(const Channel& ch, Tabulation mode) {
  if (mode == Tabulation::Always) return ch.kind() != ChannelKind::Linear;
  if (mode == Tabulation::Never) return false;
  if (ch.kind() == ChannelKind::Linear) return false;
  return !(ch.is_discrete() && ch.kind() != ChannelKind::Sigmoid);
}

}  // namespace

struct SEModel::Cache {
  double rho = 1.0;
  double s_max = 0.0;
  // E<w>^2 = 2 (rho - q) Psi'(q) as a function of s = -ln(1 - q/rho).
  std::unique_ptr<boost::math::barycentric_rational<double>> table;
  // (g(s) - g(0)) / s for s < step, as a function of log2(s / step).
  std::unique_ptr<boost::math::barycentric_rational<double>> near_zero;
  double step = 0.0;
  double g_zero = 0.0;
  double slope_smallest = 0.0;
  std::mutex grid_mutex;
  std::map<int, PotentialGrid> grids;
};

SEModel::SEModel(Prior prior, Channel channel, SEModelOptions opts)
    : prior_(std::move(prior)), channel_(std::move(channel)), cache_(std::make_shared<Cache>()) {
  cache_->rho = prior_.second_moment();
  if (!wants_table(channel_, opts.tabulation)) return;
  if (!(opts.table_step > 0.0) || !(opts.table_max_s > opts.table_step))
    throw DomainError("SEModelOptions: invalid table grid");
  const int n = static_cast<int>(std::ceil(opts.table_max_s / opts.table_step));
  const double rho = cache_->rho;
  auto g_at = [&](double s) {
    const double q = -rho * std::expm1(-s);
    return scalar_channel_average(channel_, q, rho,
                                  [](const ScalarPosterior& p) { return p.mean_w * p.mean_w; });
  };
  std::vector<double> s(n + 1), g(n + 1);
  for (int k = 0; k <= n; ++k) {
    s[k] = k * opts.table_step;
    g[k] = g_at(s[k]);
  }
  // Below the first node, small-noise channels vary on the scale q ~ Delta.
  // There the slope (g - g(0)) / s is tabulated against log2(s / step).
  std::vector<double> u(kTableRefinements + 1), hu(kTableRefinements + 1);
  for (int j = 0; j <= kTableRefinements; ++j) {
    u[j] = j - kTableRefinements;
    const double sj = opts.table_step * std::exp2(u[j]);
    hu[j] = ((j == kTableRefinements ? g[1] : g_at(sj)) - g[0]) / sj;
  }
  cache_->step = opts.table_step;
  cache_->g_zero = g[0];
  cache_->slope_smallest = hu[0];
  cache_->s_max = s.back();
  cache_->table = std::make_unique<boost::math::barycentric_rational<double>>(std::move(s),
                                                                              std::move(g), 3);
  cache_->near_zero = std::make_unique<boost::math::barycentric_rational<double>>(
      std::move(u), std::move(hu), 3);
}

bool SEModel::tabulated() const noexcept { return cache_->table != nullptr; }

double SEModel::psi_out_prime(double q) const {
  const double rho = this->rho();
  if (!(q >= 0.0 && q <= rho)) throw DomainError("SEModel::psi_out_prime: q outside [0, rho]");
  if (q == rho) return kInf;
  if (!tabulated()) return glmphase::psi_pout_prime(channel_, q, rho);
  const Cache& c = *cache_;
  const double s = std::min(-std::log1p(-q / rho), c.s_max);
  const double s_smallest = c.step * std::exp2(-kTableRefinements);
  double g;
  if (s >= c.step)
    g = (*c.table)(s);
  else if (s >= s_smallest)
    g = c.g_zero + s * (*c.near_zero)(std::log2(s / c.step));
  else
    g = c.g_zero + s * c.slope_smallest;
  g = std::max(0.0, g);
  return g / (2.0 * (rho - q));
}

double SEModel::psi_out(double q) const { return psi_pout(channel_, q, rho()); }

double SEModel::psi_in_prime(double r) const { return psi_p0_prime(prior_, r); }

double SEModel::psi_in(double r) const { return psi_p0(prior_, r); }

double SEModel::r_of_q(double alpha, double q) const {
  if (q >= rho()) return kSnrCap;
  return std::min(2.0 * alpha * psi_out_prime(q), kSnrCap);
}

double SEModel::q_of_r(double r) const {
  return std::clamp(2.0 * psi_in_prime(r), 0.0, rho());
}

std::pair<double, double> inf_over_r(const Prior& prior, double q) {
  const double mean_sq = prior.mean() * prior.mean();
  if (q <= mean_sq) return {0.0, 0.0};
  if (q >= 2.0 * psi_p0_prime(prior, kSnrCap))
    return {psi_p0(prior, kSnrCap) - 0.5 * kSnrCap * q, kSnrCap};
  // psi is convex, so the minimizer solves 2 psi'(r) = q; bisect in ln r.
  auto h = [&](double t) { return 2.0 * psi_p0_prime(prior, std::exp(t)) - q; };
  const double t_lo = std::log(1e-12);
  const double t_hi = std::log(kSnrCap);
  double r = 0.0;
  if (h(t_lo) < 0.0) r = std::exp(bisect(h, t_lo, t_hi, 1e-10));
  return {psi_p0(prior, r) - 0.5 * r * q, r};
}

const SEModel::PotentialGrid& SEModel::potential_grid(int points) const {
  if (points < 2) throw DomainError("potential_grid: needs at least two points");
  std::lock_guard<std::mutex> lock(cache_->grid_mutex);
  auto it = cache_->grids.find(points);
  if (it != cache_->grids.end()) return it->second;
  PotentialGrid grid;
  const double rho = this->rho();
  for (int k = 0; k < points; ++k) {
    const double q = k == points - 1 ? rho : rho * k / (points - 1);
    const auto [value, r] = inf_over_r(prior_, q);
    grid.q.push_back(q);
    grid.psi_out.push_back(psi_out(q));
    grid.inf_in.push_back(value);
    grid.argmin_r.push_back(r);
  }
  return cache_->grids.emplace(points, std::move(grid)).first->second;
}

SETrajectory se_run(const SEModel& model, double alpha, double q0, const FixedPointOptions& opts) {
  opts.validate();
  if (!(alpha > 0.0)) throw DomainError("se_run: alpha must be positive");
  if (!(q0 >= 0.0 && q0 <= model.rho())) throw DomainError("se_run: q0 outside [0, rho]");
  SETrajectory traj;
  traj.q_seq.push_back(q0);
  double q = q0;
  for (int t = 0; t < opts.max_iter; ++t) {
    const double r = model.r_of_q(alpha, q);
    double next = model.q_of_r(r);
    next = (1.0 - opts.damping) * next + opts.damping * q;
    traj.r_seq.push_back(r);
    traj.q_seq.push_back(next);
    if (!std::isfinite(next))
      throw DivergenceError("se_run: non-finite overlap",
                            std::vector<double>(traj.q_seq.begin(),
                                                traj.q_seq.begin() +
                                                    std::min<std::size_t>(traj.q_seq.size(), 64)));
    const double step = std::abs(next - q);
    q = next;
    if (step < opts.tol) {
      traj.converged = true;
      break;
    }
  }
  traj.q_limit = q;
  return traj;
}

SETrajectory se_run(const SEModel& model, double alpha, InitKind init,
                    const FixedPointOptions& opts) {
  if (init == InitKind::Custom) throw DomainError("se_run: custom start needs an explicit q0");
  const double rho = model.rho();
  const double q0 = init == InitKind::Uninformative ? kUninformativeInit * rho
                                                    : rho * (1.0 - kInformativeGap);
  SETrajectory traj = se_run(model, alpha, q0, opts);
  traj.init_kind = init;
  return traj;
}

SETrajectory se_run(const Prior& prior, const Channel& channel, double alpha, double q0,
                    const FixedPointOptions& opts) {
  return se_run(SEModel(prior, channel), alpha, q0, opts);
}

bool reaches_recovery(const SEModel& model, double alpha, int max_iter) {
  const double rho = model.rho();
  const double target = rho * (1.0 - kRecoveryGap);
  double q = kUninformativeInit * rho;
  for (int t = 0; t < max_iter; ++t) {
    const double next = model.q_of_r(model.r_of_q(alpha, q));
    if (next > target) return true;
    if (std::abs(next - q) < 1e-13 * rho) return false;
    q = next;
  }
  return q > target;
}

double find_alpha_amp(const SEModel& model, double alpha_lo, double alpha_hi, double tol) {
  if (!(alpha_lo > 0.0 && alpha_lo < alpha_hi)) throw DomainError("find_alpha_amp: bad bracket");
  if (reaches_recovery(model, alpha_lo))
    throw BracketError("find_alpha_amp: SE already recovers at alpha_lo");
  if (!reaches_recovery(model, alpha_hi))
    throw BracketError("find_alpha_amp: SE does not recover at alpha_hi");
  while (alpha_hi - alpha_lo > tol) {
    const double mid = 0.5 * (alpha_lo + alpha_hi);
    (reaches_recovery(model, mid) ? alpha_hi : alpha_lo) = mid;
  }
  return 0.5 * (alpha_lo + alpha_hi);
}

namespace {

// Positive when the informative branch is the global optimizer.
double informative_advantage(const SEModel& model, double alpha) {
  const double rho = model.rho();
  SolveOptions opts;
  const SETrajectory inf = se_run(model, alpha, InitKind::Informative, opts.se);
  const double q_inf = inf.q_limit;
  const std::vector<ReplicaPoint> gamma = gamma_set(model, alpha, opts);
  const ReplicaPoint* informative = nullptr;
  for (const ReplicaPoint& p : gamma)
    if (std::abs(p.q - q_inf) < opts.unique_tol * rho) informative = &p;
  double best_other = -kInf;
  for (const ReplicaPoint& p : gamma)
    if (p.q < q_inf - opts.unique_tol * rho) best_other = std::max(best_other, p.f_value);
  if (best_other == -kInf) return q_inf > rho * (1.0 - kRecoveryGap) ? 1.0 : -1.0;
  if (informative == nullptr) return -1.0;
  if (!(informative->q > rho * (1.0 - kRecoveryGap))) return -1.0;
  return informative->f_value - best_other;
}

}  // namespace

AlphaItResult find_alpha_it(const SEModel& model, double alpha_lo, double alpha_hi, double tol) {
  if (!(alpha_lo > 0.0 && alpha_lo < alpha_hi)) throw DomainError("find_alpha_it: bad bracket");
  AlphaItResult result;
  const double d_lo = informative_advantage(model, alpha_lo);
  const double d_hi = informative_advantage(model, alpha_hi);
  if (d_lo > 0.0 || d_hi <= 0.0) {
    std::ostringstream msg;
    msg << "no first-order transition in [" << alpha_lo << ", " << alpha_hi
        << "]: informative advantage " << d_lo << " -> " << d_hi;
    result.diagnostic = msg.str();
    return result;
  }
  while (alpha_hi - alpha_lo > tol) {
    const double mid = 0.5 * (alpha_lo + alpha_hi);
    (informative_advantage(model, mid) > 0.0 ? alpha_hi : alpha_lo) = mid;
  }
  result.alpha = 0.5 * (alpha_lo + alpha_hi);
  return result;
}

namespace {

// f of the best recovery branch minus f of the best other branch; NaN if either is absent.
double branch_gap(const Prior& prior, const Channel& channel, double alpha) {
  const SEModel model(prior, channel);
  double f_rec = -kInf, f_other = -kInf;
  for (const ReplicaPoint& p : gamma_set(model, alpha)) {
    double& best = p.recovery ? f_rec : f_other;
    best = std::max(best, p.f_value);
  }
  if (f_rec == -kInf || f_other == -kInf) return std::numeric_limits<double>::quiet_NaN();
  return f_rec - f_other;
}

}  // namespace

NoiselessItEstimate find_alpha_it_noiseless(const Prior& prior,
                                            const std::function<Channel(double)>& channel_at,
                                            double delta_hi, double delta_lo, double alpha_lo,
                                            double alpha_hi, double tol) {
  if (!(delta_hi > 0.0 && delta_hi < 1.0 && delta_lo > 0.0 && delta_lo < delta_hi))
    throw DomainError("find_alpha_it_noiseless: need 0 < delta_lo < delta_hi < 1");
  NoiselessItEstimate est;
  est.delta_hi = delta_hi;
  est.delta_lo = delta_lo;
  const AlphaItResult at_delta =
      find_alpha_it(SEModel(prior, channel_at(delta_hi)), alpha_lo, alpha_hi, tol);
  if (!at_delta.alpha) throw BracketError("find_alpha_it_noiseless: " + at_delta.diagnostic);
  est.alpha_at_delta = *at_delta.alpha;

  const double log_ratio = std::log(delta_hi / delta_lo);
  auto slope = [&](double alpha) {
    return 2.0 * (branch_gap(prior, channel_at(delta_lo), alpha) -
                  branch_gap(prior, channel_at(delta_hi), alpha)) /
           log_ratio;
  };
  const double a0 = est.alpha_at_delta;
  const double k0 = slope(a0);
  // Above the threshold the non-recovery branch eventually vanishes; shrink the step until it exists.
  double step = 0.05 * a0, k1 = std::numeric_limits<double>::quiet_NaN();
  for (int attempt = 0; attempt < 4 && !std::isfinite(k1); ++attempt, step *= 0.5)
    k1 = slope(a0 + step);
  if (!std::isfinite(k0) || !std::isfinite(k1) || !(k1 > k0))
    throw BracketError("find_alpha_it_noiseless: free-entropy slope is not increasing in alpha");
  step *= 2.0;
  est.sample_alphas = {a0, a0 + step};
  est.slopes = {k0, k1};
  est.alpha = a0 - k0 * step / (k1 - k0);
  return est;
}

double find_alpha_c(const Channel& channel, double rho) {
  const double integral = stability_integral(channel, rho);
  if (!(integral > 0.0))
    throw DomainError("find_alpha_c: stability integral is not positive (non-informative channel)");
  return 1.0 / integral;
}

std::vector<TransitionReport> phase_sweep(const SweepSpec& spec) {
  if (spec.params.empty()) throw DomainError("phase_sweep: empty parameter grid");
  if (!spec.prior_at || !spec.channel_at) throw DomainError("phase_sweep: missing families");
  std::vector<TransitionReport> rows(spec.params.size());
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < rows.size(); i = next++) {
      TransitionReport& row = rows[i];
      row.param = spec.params[i];
      row.bracket_width = spec.tol;
      std::vector<std::string> errors;
      try {
        const Prior prior = spec.prior_at(row.param);
        const Channel channel = spec.channel_at(row.param);
        const SEModel model(prior, channel);
        if (channel.is_even() && prior.mean() == 0.0) {
          try {
            row.alpha_c = find_alpha_c(channel, prior.second_moment());
          } catch (const Error& e) {
            errors.push_back(std::string("alpha_c: ") + e.what());
          }
        }
        if (spec.want_amp) {
          try {
            row.alpha_amp = find_alpha_amp(model, spec.alpha_lo, spec.alpha_hi, spec.tol);
          } catch (const Error& e) {
            errors.push_back(std::string("alpha_amp: ") + e.what());
          }
        }
        if (spec.want_it && channel.is_noiseless_continuous()) {
          try {
            row.alpha_it = find_alpha_it_noiseless(
                               prior, [&](double d) { return channel.with_delta(d); },
                               spec.noiseless_delta_hi, spec.noiseless_delta_lo, spec.alpha_lo,
                               spec.alpha_hi)
                               .alpha;
          } catch (const Error& e) {
            errors.push_back(std::string("alpha_it: ") + e.what());
          }
        } else if (spec.want_it) {
          try {
            const AlphaItResult it = find_alpha_it(model, spec.alpha_lo, spec.alpha_hi, spec.tol);
            row.alpha_it = it.alpha;
            if (!it.alpha) errors.push_back("alpha_it: " + it.diagnostic);
          } catch (const Error& e) {
            errors.push_back(std::string("alpha_it: ") + e.what());
          }
        }
      } catch (const Error& e) {
        errors.push_back(e.what());
      }
      for (std::size_t k = 0; k < errors.size(); ++k) row.error += (k ? "; " : "") + errors[k];
    }
  };

  const int workers = std::max(1, std::min<int>(spec.workers, static_cast<int>(rows.size())));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return rows;
}

}  // namespace glmphase
