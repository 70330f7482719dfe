#include "glmphase/replica.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "glmphase/errors.hpp"
#include "glmphase/special.hpp"

namespace glmphase {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kErrorTol = 1e-11;

void check_q(double q, double rho, const char* who) {
  if (!(rho > 0.0)) throw DomainError(std::string(who) + ": rho must be positive");
  if (!(q >= 0.0 && q <= rho)) throw DomainError(std::string(who) + ": q must lie in [0, rho]");
}

}  // namespace

double f_rs(const SEModel& model, double alpha, double q, double r) {
  check_q(q, model.rho(), "f_rs");
  if (!(r >= 0.0)) throw DomainError("f_rs: r must be nonnegative");
  r = std::min(r, kSnrCap);
  return model.psi_in(r) + alpha * model.psi_out(q) - 0.5 * r * q;
}

double f_rs(const Prior& prior, const Channel& channel, double alpha, double q, double r) {
  return f_rs(SEModel(prior, channel, {Tabulation::Never}), alpha, q, r);
}

double i_rs(const SEModel& model, double alpha, double q, double r) {
  const double rho = model.rho();
  check_q(q, rho, "i_rs");
  if (!(r >= 0.0)) throw DomainError("i_rs: r must be nonnegative");
  r = std::min(r, kSnrCap);
  const double info_in = 0.5 * r * rho - model.psi_in(r);
  const double info_out = model.psi_out(rho) - model.psi_out(q);
  return info_in + alpha * info_out - 0.5 * r * (rho - q);
}

double i_rs(const Prior& prior, const Channel& channel, double alpha, double q, double r) {
  return i_rs(SEModel(prior, channel, {Tabulation::Never}), alpha, q, r);
}

std::vector<ReplicaPoint> gamma_set(const SEModel& model, double alpha, const SolveOptions& opts,
                                    bool* converged) {
  const double rho = model.rho();
  std::vector<double> qs;
  bool all_converged = true;
  for (InitKind init : {InitKind::Uninformative, InitKind::Informative}) {
    const SETrajectory traj = se_run(model, alpha, init, opts.se);
    if (traj.converged)
      qs.push_back(traj.q_limit);
    else
      all_converged = false;
  }
  if (converged) *converged = all_converged;

  // Crossings of the SE map with the diagonal, stable or not.
  if (opts.scan_points >= 2) {
    auto residual = [&](double q) { return model.q_of_r(model.r_of_q(alpha, q)) - q; };
    const int n = opts.scan_points;
    std::vector<double> grid(n), res(n);
    for (int k = 0; k < n; ++k) {
      grid[k] = k == n - 1 ? rho * (1.0 - kInformativeGap) : rho * k / (n - 1);
      res[k] = residual(grid[k]);
    }
    for (int k = 0; k < n; ++k) {
      if (res[k] == 0.0) qs.push_back(grid[k]);
      if (k + 1 < n && res[k] * res[k + 1] < 0.0)
        qs.push_back(bisect(residual, grid[k], grid[k + 1], 1e-12 * rho));
    }
  }

  std::vector<ReplicaPoint> points;
  for (double q : qs) {
    const bool duplicate = std::any_of(points.begin(), points.end(), [&](const ReplicaPoint& p) {
      return std::abs(p.q - q) < 1e-2 * opts.unique_tol * rho;
    });
    if (duplicate) continue;
    ReplicaPoint p;
    p.q = q;
    p.r = model.r_of_q(alpha, q);
    p.recovery = p.r >= kSnrCap || q > rho * (1.0 - kRecoveryGap);
    p.f_value = f_rs(model, alpha, q, p.r);
    p.i_value = i_rs(model, alpha, q, p.r);
    points.push_back(p);
  }
  std::sort(points.begin(), points.end(),
            [](const ReplicaPoint& a, const ReplicaPoint& b) { return a.q < b.q; });
  return points;
}

DirectOptimum sup_q_inf_r(const SEModel& model, double alpha, int grid_points) {
  const SEModel::PotentialGrid& grid = model.potential_grid(grid_points);
  const int n = static_cast<int>(grid.q.size());
  int best = 0;
  for (int k = 0; k < n; ++k) {
    const double f = grid.inf_in[k] + alpha * grid.psi_out[k];
    if (f >= grid.inf_in[best] + alpha * grid.psi_out[best]) best = k;
  }
  DirectOptimum out{grid.q[best], grid.argmin_r[best],
                    grid.inf_in[best] + alpha * grid.psi_out[best]};
  auto objective = [&](double q) { return inf_over_r(model.prior(), q).first + alpha * model.psi_out(q); };
  const double lo = grid.q[std::max(best - 1, 0)];
  const double hi = grid.q[std::min(best + 1, n - 1)];
  const double q = golden_section_max(objective, lo, hi, 1e-7 * model.rho());
  const double f = objective(q);
  if (f > out.f) out = {q, inf_over_r(model.prior(), q).second, f};
  return out;
}

DirectOptimum sup_r_inf_q(const SEModel& model, double alpha, int grid_points) {
  const double rho = model.rho();
  const double q_top = rho * (1.0 - kInformativeGap);
  // inf_q alpha Psi(q) - r q / 2; Psi is convex so the minimizer solves 2 alpha Psi'(q) = r.
  auto inner = [&](double r) -> std::pair<double, double> {
    double q;
    if (r <= 2.0 * alpha * model.psi_out_prime(0.0)) {
      q = 0.0;
    } else if (r >= 2.0 * alpha * model.psi_out_prime(q_top)) {
      q = rho;
    } else {
      q = bisect([&](double x) { return 2.0 * alpha * model.psi_out_prime(x) - r; }, 0.0, q_top,
                 1e-12 * rho);
    }
    return {alpha * model.psi_out(q) - 0.5 * r * q, q};
  };
  // The exact-recovery point r = +infinity is reached only at the cap.
  const double r_max = kSnrCap;
  auto outer = [&](double u) {
    const double r = std::expm1(u);
    return model.psi_in(r) + inner(r).first;
  };
  const double u_max = std::log1p(r_max);
  int best = 0;
  double best_f = -kInf;
  for (int k = 0; k < grid_points; ++k) {
    const double f = outer(u_max * k / (grid_points - 1));
    if (f >= best_f) {
      best_f = f;
      best = k;
    }
  }
  const double step = u_max / (grid_points - 1);
  const double u = golden_section_max(outer, std::max(0.0, (best - 1) * step),
                                      std::min(u_max, (best + 1) * step), 1e-9 * (1.0 + u_max));
  double u_best = best * step;
  if (outer(u) > best_f) {
    u_best = u;
    best_f = outer(u);
  }
  const double r = std::expm1(u_best);
  return {inner(r).second, r, best_f};
}

ReplicaSolution solve(const SEModel& model, double alpha, const SolveOptions& opts) {
  if (!(alpha > 0.0)) throw DomainError("solve: alpha must be positive");
  if (model.channel().is_noiseless_continuous())
    throw DomainError("solve: the potential is unbounded for a noiseless continuous channel; "
                      "use a small positive delta");
  const double rho = model.rho();
  ReplicaSolution sol;
  sol.gamma_set = gamma_set(model, alpha, opts, &sol.se_converged);
  if (sol.gamma_set.empty()) throw DivergenceError("solve: no fixed point found", {});

  // Max over Gamma; ties go to the larger overlap.
  const ReplicaPoint* best = &sol.gamma_set.front();
  for (const ReplicaPoint& p : sol.gamma_set)
    if (p.f_value >= best->f_value - 1e-12) best = &p;
  for (const ReplicaPoint& p : sol.gamma_set)
    if (std::abs(p.q - best->q) >= opts.unique_tol * rho && p.f_value >= best->f_value - 1e-8)
      sol.unique = false;

  sol.q_star = best->q;
  sol.r_star = best->r;
  sol.free_entropy = best->f_value;
  sol.mutual_information = best->i_value;

  const DirectOptimum direct = sup_q_inf_r(model, alpha, opts.grid_points);
  sol.direct_q = direct.q;
  sol.direct_f = direct.f;
  if (opts.check_routes && std::abs(direct.f - sol.free_entropy) > opts.route_tol) {
    std::ostringstream msg;
    msg.precision(12);
    msg << "solve: Gamma route (q=" << sol.q_star << ", f=" << sol.free_entropy
        << ") and direct route (q=" << direct.q << ", f=" << direct.f << ") disagree at alpha="
        << alpha;
    throw RouteMismatchError(msg.str());
  }

  sol.mmse = rho - sol.q_star;
  sol.matrix_mmse = rho * rho - sol.q_star * sol.q_star;
  sol.gen_error = generalization_error(model.channel(), rho, sol.q_star);
  return sol;
}

ReplicaSolution solve(const Prior& prior, const Channel& channel, double alpha,
                      const SolveOptions& opts) {
  return solve(SEModel(prior, channel), alpha, opts);
}

double generalization_error(const Channel& channel, double rho, double q) {
  check_q(q, rho, "generalization_error");
  const double V = rho - q;
  const double sr = std::sqrt(rho), sq = std::sqrt(q), sv = std::sqrt(V);
  const std::vector<double> kinks = channel.kinks();
  const double sharp = channel.kind() == ChannelKind::Sigmoid ? 1.0 / channel.slope() : 0.0;

  std::vector<double> cuts;
  for (double k : kinks) add_feature(cuts, k / sr, sharp / sr);
  const double second = expect_normal([&](double v) { return channel.second_output(sr * v); },
                                      cuts, kErrorTol);

  auto inner = [&](double v) {
    const double omega = sq * v;
    if (V == 0.0) return channel.mean_output(omega);
    std::vector<double> w_cuts;
    for (double k : kinks) add_feature(w_cuts, (k - omega) / sv, sharp / sv);
    return expect_normal([&](double w) { return channel.mean_output(omega + sv * w); }, w_cuts,
                         kErrorTol);
  };
  double first;
  if (q == 0.0) {
    const double m = inner(0.0);
    first = m * m;
  } else {
    std::vector<double> v_cuts;
    for (double k : kinks) add_feature(v_cuts, k / sq, std::max(sv, sharp) / sq);
    first = expect_normal([&](double v) {
      const double m = inner(v);
      return m * m;
    },
                          v_cuts, kErrorTol);
  }
  return second - first + channel.delta();
}

std::optional<double> generalization_error_closed_form(const Channel& channel, double rho,
                                                       double q) {
  check_q(q, rho, "generalization_error_closed_form");
  if (channel.epsilon() != 0.0) return std::nullopt;
  const double V = rho - q;
  const double delta = channel.delta();
  const double sq = std::sqrt(q);
  auto expect = [](auto&& f, double center_width) {
    std::vector<double> cuts;
    add_feature(cuts, 0.0, center_width);
    return expect_normal(f, cuts, kErrorTol);
  };
  switch (channel.kind()) {
    case ChannelKind::Linear:
      return rho - q + delta;
    case ChannelKind::Sign: {
      if (V == 0.0) return delta;
      const double c = std::sqrt(q / (2.0 * V));
      const double e = expect([&](double v) {
        const double t = std::erf(c * v);
        return t * t;
      },
                              c > 0.0 ? 1.0 / c : 0.0);
      return 1.0 - e + delta;
    }
    case ChannelKind::Door: {
      const double k = channel.threshold();
      if (V == 0.0) return delta;
      const double s = std::sqrt(2.0 * V);
      std::vector<double> cuts;
      if (q > 0.0) {
        add_feature(cuts, k / sq, std::sqrt(V / q));
        add_feature(cuts, -k / sq, std::sqrt(V / q));
      }
      const double e = expect_normal([&](double v) {
        const double t = std::erf((k - sq * v) / s) - std::erf(-(k + sq * v) / s) - 1.0;
        return t * t;
      },
                                     cuts, kErrorTol);
      return 1.0 - e + delta;
    }
    case ChannelKind::ReLU: {
      if (V == 0.0) return delta;
      const double c = std::sqrt(q / (2.0 * V));
      const double e = expect([&](double v) {
        const double t = std::erf(c * v);
        return v * v * t * t;
      },
                              c > 0.0 ? 1.0 / c : 0.0);
      const double tail = std::pow(V, 1.5) / std::sqrt(rho + q) *
                          (1.0 / (2.0 * std::numbers::pi) + q / (rho * std::numbers::pi));
      return 0.5 * rho - 0.25 * q * (1.0 + e) - tail + delta;
    }
    case ChannelKind::Abs: {
      auto b = [](double x, double y) {
        if (y == 0.0) return std::abs(x);
        return std::sqrt(2.0 * y / std::numbers::pi) * std::exp(-x * x / (2.0 * y)) +
               x * std::erf(x / std::sqrt(2.0 * y));
      };
      const double e = expect([&](double v) {
        const double t = b(v * sq, V);
        return t * t;
      },
                              q > 0.0 ? std::sqrt(V / q) : 0.0);
      return rho - e + delta;
    }
    case ChannelKind::Sigmoid: {
      const double lam = channel.slope();
      const double sv = std::sqrt(V);
      auto mean_f = [&](double v) {
        const double omega = sq * v;
        if (V == 0.0) return special::logistic(lam * omega);
        std::vector<double> cuts;
        add_feature(cuts, -omega / sv, 1.0 / (lam * sv));
        return expect_normal([&](double w) { return special::logistic(lam * (omega + sv * w)); },
                             cuts, kErrorTol);
      };
      const double e = expect([&](double v) {
        const double m = mean_f(v);
        return m * m;
      },
                              q > 0.0 ? std::max(sv, 1.0 / lam) / sq : 0.0);
      return 2.0 - 4.0 * e;
    }
  }
  return std::nullopt;
}

double denoising_error(const Channel& channel, double rho, double q) {
  check_q(q, rho, "denoising_error");
  if (!(channel.delta() > 0.0) || channel.is_discrete())
    throw DomainError("denoising_error: requires a channel with delta > 0");
  const double sr = std::sqrt(rho);
  std::vector<double> cuts;
  for (double k : channel.kinks()) cuts.push_back(k / sr);
  const double second = expect_normal([&](double v) { return channel.second_output(sr * v); },
                                      cuts, kErrorTol);
  const double mean_sq = scalar_channel_average(
      channel, q, rho, [](const ScalarPosterior& p) { return p.mean_phi * p.mean_phi; });
  return second - mean_sq;
}

}  // namespace glmphase
