#pragma once

// Replica-symmetric potential f_RS(q, r) = psi_P0(r) + alpha Psi_Pout(q) - r q / 2,
// its optimizers and the asymptotic errors derived from them.

#include <optional>
#include <vector>

#include "glmphase/channels.hpp"
#include "glmphase/numerics.hpp"
#include "glmphase/priors.hpp"
#include "glmphase/state_evolution.hpp"

namespace glmphase {

struct ReplicaPoint {
  double q = 0.0;
  double r = 0.0;
  double f_value = 0.0;
  double i_value = 0.0;
  bool recovery = false;  // r at the cap (q = rho branch)
};

struct SolveOptions {
  FixedPointOptions se{0.0, 1e-10, 5000};
  int scan_points = 101;
  int grid_points = 201;
  bool check_routes = true;
  double route_tol = 1e-5;
  double unique_tol = 1e-4;  // relative to rho
};

struct ReplicaSolution {
  double q_star = 0.0;
  double r_star = 0.0;
  double free_entropy = 0.0;
  double mutual_information = 0.0;
  std::vector<ReplicaPoint> gamma_set;
  bool unique = true;
  bool se_converged = true;
  double mmse = 0.0;
  double matrix_mmse = 0.0;
  double gen_error = 0.0;
  double direct_q = 0.0;
  double direct_f = 0.0;
};

double f_rs(const Prior& prior, const Channel& channel, double alpha, double q, double r);
double f_rs(const SEModel& model, double alpha, double q, double r);

/// i_RS = I_P0(r) + alpha (Psi(rho) - Psi(q)) - (r/2)(rho - q).
double i_rs(const Prior& prior, const Channel& channel, double alpha, double q, double r);
double i_rs(const SEModel& model, double alpha, double q, double r);

/// Fixed points of the SE map reached from both canonical starts plus the
/// crossings found on a q-grid, each with its potential value.
std::vector<ReplicaPoint> gamma_set(const SEModel& model, double alpha,
                                    const SolveOptions& opts = {}, bool* converged = nullptr);

struct DirectOptimum {
  double q = 0.0;
  double r = 0.0;
  double f = 0.0;
};

/// sup_q inf_r f_RS on a q-grid with golden-section refinement.
DirectOptimum sup_q_inf_r(const SEModel& model, double alpha, int grid_points = 201);
/// sup_r inf_q f_RS, the dual ordering.
DirectOptimum sup_r_inf_q(const SEModel& model, double alpha, int grid_points = 201);

/// Throws RouteMismatchError when the Gamma route and the direct route differ by
/// more than opts.route_tol in free entropy.
ReplicaSolution solve(const SEModel& model, double alpha, const SolveOptions& opts = {});
ReplicaSolution solve(const Prior& prior, const Channel& channel, double alpha,
                      const SolveOptions& opts = {});

/// E[phi(sqrt(rho) V)^2] - E_V[E_W phi(sqrt(q) V + sqrt(rho - q) W)]^2 + Delta.
double generalization_error(const Channel& channel, double rho, double q);

/// Closed-form expression for the same quantity, when the channel has one.
std::optional<double> generalization_error_closed_form(const Channel& channel, double rho,
                                                       double q);

/// E[phi(sqrt(rho) V)^2] - E[<phi>^2] under the scalar output channel. Requires Delta > 0.
double denoising_error(const Channel& channel, double rho, double q);

}  // namespace glmphase
