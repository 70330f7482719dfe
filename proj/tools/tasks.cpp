#include "tasks.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <functional>
#include <thread>
#include <tuple>

#include "glmphase/descriptors.hpp"
#include "glmphase/errors.hpp"
#include "glmphase/gamp.hpp"
#include "glmphase/replica.hpp"
#include "glmphase/state_evolution.hpp"
#include "glmphase/validation.hpp"

namespace glmphase::cli {

namespace {

using Rows = std::vector<std::vector<Cell>>;

constexpr std::size_t kMaxGridPoints = 1000000;
constexpr std::uint64_t kTestStream = 3;

// Rounds to 12 significant digits so that 0.2 + 0.1 lands on the double nearest 0.3.
double snap(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 12);
  double y = x;
  std::from_chars(buf, res.ptr, y);
  return y;
}

std::vector<double> grid(const Config& cfg, const std::string& name) {
  const double lo = cfg.real("grid." + name + "_min");
  const double hi = cfg.real("grid." + name + "_max");
  const double step = cfg.real("grid." + name + "_step");
  if (!(step > 0.0)) throw ConfigError("grid." + name + "_step must be > 0");
  if (!(hi >= lo)) throw ConfigError("grid." + name + "_max must be >= grid." + name + "_min");
  const double span = (hi - lo) / step;
  if (span > static_cast<double>(kMaxGridPoints))
    throw ConfigError("grid over " + name + " has more than 1e6 points");
  const auto count = static_cast<std::size_t>(std::floor(span + 1e-9)) + 1;
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) values[i] = snap(lo + static_cast<double>(i) * step);
  return values;
}

std::string substitute(std::string text, double param) {
  const std::string token = "{param}";
  const std::string value = format_shortest(param);
  for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos))
    text.replace(pos, token.size(), value);
  return text;
}

Prior config_prior(const std::string& text) {
  try {
    return parse_prior(text);
  } catch (const Error& e) {
    throw ConfigError(std::string("model.prior: ") + e.what());
  }
}

Channel config_channel(const std::string& text) {
  try {
    return parse_channel(text);
  } catch (const Error& e) {
    throw ConfigError(std::string("model.channel: ") + e.what());
  }
}

FixedPointOptions se_options(const Config& cfg) {
  FixedPointOptions fp;
  fp.damping = cfg.real("numerics.se_damping", fp.damping);
  fp.tol = cfg.real("numerics.se_tol", fp.tol);
  fp.max_iter = cfg.integer("numerics.se_max_iter", fp.max_iter);
  try {
    fp.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("numerics: ") + e.what());
  }
  return fp;
}

// Runs work(i) for i in [0, count) on `workers` threads pulling indices from a shared counter.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& work) {
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < count; i = next++) work(i);
  };
  const int threads = std::max(1, std::min<int>(workers, static_cast<int>(count)));
  std::vector<std::thread> pool;
  for (int w = 1; w < threads; ++w) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
}

// Row blocks are concatenated in index order, independent of scheduling.
Rows parallel_rows(std::size_t count, int workers, const std::function<Rows(std::size_t)>& work) {
  std::vector<Rows> parts(count);
  parallel_for(count, workers, [&](std::size_t i) { parts[i] = work(i); });
  Rows out;
  for (auto& p : parts)
    for (auto& r : p) out.push_back(std::move(r));
  return out;
}

Cell opt(const std::optional<double>& x) {
  return x ? Cell{*x} : Cell{};
}

TaskOutcome run_potential(const Config& cfg, int workers) {
  const SEModel model(config_prior(cfg.text("model.prior")),
                      config_channel(cfg.text("model.channel")));
  const std::vector<double> alphas = grid(cfg, "alpha");
  const int q_points = cfg.integer("grid.q_points", 101);
  if (q_points < 2) throw ConfigError("grid.q_points must be >= 2");
  const double rho = model.rho();

  // The alpha-independent pieces inf_r [psi(r) - r q / 2] and Psi(q), one row per q.
  struct Piece {
    double q, r, inf_in, psi_out;
    std::string error;
  };
  std::vector<Piece> pieces(q_points);
  parallel_for(q_points, workers, [&](std::size_t i) {
    Piece& p = pieces[i];
    p.q = rho * static_cast<double>(i) / (q_points - 1);
    try {
      std::tie(p.inf_in, p.r) = inf_over_r(model.prior(), p.q);
      p.psi_out = model.psi_out(p.q);
    } catch (const std::exception& e) {
      p.error = e.what();
    }
  });

  TaskOutcome out{ResultTable({{"alpha"}, {"q"}, {"r_opt", true}, {"f_value", true}, {"error"}})};
  for (double alpha : alphas)
    for (const Piece& p : pieces) {
      if (!p.error.empty())
        out.table.add_row({alpha, p.q, Cell{}, Cell{}, p.error});
      else
        out.table.add_row({alpha, p.q, p.r, p.inf_in + alpha * p.psi_out, std::string()});
    }
  return out;
}

TaskOutcome run_se(const Config& cfg, int workers) {
  const SEModel model(config_prior(cfg.text("model.prior")),
                      config_channel(cfg.text("model.channel")));
  const std::vector<double> alphas = grid(cfg, "alpha");
  const FixedPointOptions fp = se_options(cfg);

  TaskOutcome out{ResultTable({{"alpha"},
                               {"init"},
                               {"t", true},
                               {"q", true},
                               {"r", true},
                               {"converged", true},
                               {"error"}})};
  Rows rows = parallel_rows(alphas.size(), workers, [&](std::size_t i) {
    Rows part;
    const double alpha = alphas[i];
    for (InitKind init : {InitKind::Uninformative, InitKind::Informative}) {
      const std::string name = init == InitKind::Uninformative ? "uninformative" : "informative";
      try {
        const SETrajectory tr = se_run(model, alpha, init, fp);
        for (std::size_t t = 0; t < tr.q_seq.size(); ++t) {
          const Cell r = t < tr.r_seq.size() ? Cell{tr.r_seq[t]} : Cell{};
          part.push_back({alpha, name, static_cast<std::int64_t>(t), tr.q_seq[t], r,
                          tr.converged, std::string()});
        }
      } catch (const std::exception& e) {
        part.push_back({alpha, name, Cell{}, Cell{}, Cell{}, Cell{}, std::string(e.what())});
      }
    }
    return part;
  });
  for (auto& r : rows) out.table.add_row(std::move(r));
  return out;
}

TaskOutcome run_errors(const Config& cfg, int workers) {
  const SEModel model(config_prior(cfg.text("model.prior")),
                      config_channel(cfg.text("model.channel")));
  const std::vector<double> alphas = grid(cfg, "alpha");
  SolveOptions opts;
  opts.se = se_options(cfg);
  const double rho = model.rho();

  TaskOutcome out{ResultTable({{"alpha"},
                               {"q_star", true},
                               {"r_star", true},
                               {"free_entropy", true},
                               {"mmse", true},
                               {"matrix_mmse", true},
                               {"gen_error_replica", true},
                               {"gen_error_se", true},
                               {"unique_flag", true},
                               {"error"}})};
  Rows rows = parallel_rows(alphas.size(), workers, [&](std::size_t i) {
    const double alpha = alphas[i];
    try {
      const ReplicaSolution sol = solve(model, alpha, opts);
      const SETrajectory amp = se_run(model, alpha, InitKind::Uninformative, opts.se);
      const double q_amp = std::clamp(amp.q_limit, 0.0, rho);
      return Rows{{alpha, sol.q_star, sol.r_star, sol.free_entropy, sol.mmse, sol.matrix_mmse,
                   sol.gen_error, generalization_error(model.channel(), rho, q_amp), sol.unique,
                   std::string()}};
    } catch (const std::exception& e) {
      return Rows{{alpha, Cell{}, Cell{}, Cell{}, Cell{}, Cell{}, Cell{}, Cell{}, Cell{},
                   std::string(e.what())}};
    }
  });
  for (auto& r : rows) out.table.add_row(std::move(r));
  return out;
}

TaskOutcome run_gamp(const Config& cfg, int workers) {
  const Prior prior = config_prior(cfg.text("model.prior"));
  const Channel channel = config_channel(cfg.text("model.channel"));
  const std::uint64_t seed = cfg.seed("run.seed");
  const int n = cfg.integer("gamp.n", 2000);
  const double alpha = cfg.real("gamp.alpha");
  const int instances = cfg.integer("gamp.instances", 1);
  const int n_test = cfg.integer("gamp.n_test", 1000);
  if (n < 1) throw ConfigError("gamp.n must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("gamp.alpha must be > 0");
  if (instances < 1) throw ConfigError("gamp.instances must be >= 1");
  if (n_test < 0) throw ConfigError("gamp.n_test must be >= 0");
  GampOptions opts;
  opts.max_iter = cfg.integer("gamp.max_iter", opts.max_iter);
  opts.tol = cfg.real("gamp.tol", opts.tol);
  opts.damping = cfg.real("gamp.damping", opts.damping);
  opts.channel_epsilon = cfg.optional_real("gamp.channel_epsilon");
  const std::string rule = cfg.text("gamp.lambda_rule", "output_derivative");
  if (rule == "output_square")
    opts.lambda_rule = LambdaRule::OutputSquare;
  else if (rule != "output_derivative")
    throw ConfigError("gamp.lambda_rule must be output_derivative or output_square");
  if (opts.max_iter < 1) throw ConfigError("gamp.max_iter must be >= 1");
  if (!(opts.damping >= 0.0 && opts.damping < 1.0))
    throw ConfigError("gamp.damping must lie in [0, 1)");

  const SEModel model(prior, channel);
  const double rho = model.rho();
  FixedPointOptions fp = se_options(cfg);
  fp.max_iter = std::max(fp.max_iter, opts.max_iter);
  const SETrajectory se = se_run(model, alpha, InitKind::Uninformative, fp);
  auto q_se = [&](int t) {
    const std::size_t k = std::min<std::size_t>(t, se.q_seq.size() - 1);
    return std::clamp(se.q_seq[k], 0.0, rho);
  };

  TaskOutcome out{ResultTable({{"instance"},
                               {"seed"},
                               {"t", true},
                               {"overlap", true},
                               {"norm_sq", true},
                               {"mse", true},
                               {"gen_error_mc", true},
                               {"q_se", true},
                               {"error"}})};
  Rows rows = parallel_rows(instances, workers, [&](std::size_t k) {
    const std::uint64_t inst_seed = mix_seed(seed, k);
    const auto id = static_cast<std::int64_t>(k);
    const std::string seed_text = std::to_string(inst_seed);
    Rows part;
    try {
      const Instance inst = generate_instance(prior, channel, n, alpha, inst_seed);
      const std::uint64_t test_seed = mix_seed(inst_seed, kTestStream);
      GampOptions run_opts = opts;
      run_opts.seed = inst_seed;
      const Eigen::VectorXd& xs = inst.x_star;
      Rows iterations;
      auto observer = [&](const GampState& st) {
        // A divergence retry restarts the iteration count.
        if (st.t == 1) iterations.clear();
        const Cell gen = n_test > 0 ? Cell{empirical_generalization_error(
                                              inst, st.x_hat, q_se(st.t), n_test, test_seed)
                                              .mean}
                                    : Cell{};
        iterations.push_back({id, seed_text, static_cast<std::int64_t>(st.t),
                              st.x_hat.dot(xs) / n, st.x_hat.squaredNorm() / n,
                              (st.x_hat - xs).squaredNorm() / n, gen, q_se(st.t),
                              std::string()});
      };
      const GampRun run = gamp_run(inst, run_opts, observer);
      part.push_back({id, seed_text, std::int64_t{0}, run.overlap_seq.front(),
                      run.norm_seq.front(), run.mse_seq.front(), Cell{}, q_se(0), std::string()});
      for (auto& r : iterations) part.push_back(std::move(r));
    } catch (const std::exception& e) {
      part.push_back({id, seed_text, Cell{}, Cell{}, Cell{}, Cell{}, Cell{}, Cell{},
                      std::string(e.what())});
    }
    return part;
  });
  for (auto& r : rows) out.table.add_row(std::move(r));
  return out;
}

TaskOutcome run_phase_diagram(const Config& cfg, int workers) {
  const std::string prior_text = cfg.text("model.prior");
  const std::string channel_text = cfg.text("model.channel");
  SweepSpec spec;
  spec.params = grid(cfg, "param");
  // Parse once up front so a malformed template is a configuration error.
  config_prior(substitute(prior_text, spec.params.front()));
  config_channel(substitute(channel_text, spec.params.front()));
  spec.prior_at = [prior_text](double p) { return parse_prior(substitute(prior_text, p)); };
  spec.channel_at = [channel_text](double p) { return parse_channel(substitute(channel_text, p)); };
  spec.alpha_lo = cfg.real("numerics.bracket_lo", spec.alpha_lo);
  spec.alpha_hi = cfg.real("numerics.bracket_hi", spec.alpha_hi);
  spec.tol = cfg.real("numerics.bracket_tol", spec.tol);
  if (!(spec.alpha_lo > 0.0 && spec.alpha_lo < spec.alpha_hi))
    throw ConfigError("numerics.bracket_lo must satisfy 0 < bracket_lo < bracket_hi");
  if (!(spec.tol > 0.0)) throw ConfigError("numerics.bracket_tol must be > 0");
  spec.workers = workers;

  TaskOutcome out{ResultTable({{"param"},
                               {"alpha_it", true},
                               {"alpha_amp", true},
                               {"alpha_c", true},
                               {"bracket_width"},
                               {"error"}})};
  for (const TransitionReport& r : phase_sweep(spec))
    out.table.add_row(
        {r.param, opt(r.alpha_it), opt(r.alpha_amp), opt(r.alpha_c), r.bracket_width, r.error});
  return out;
}

TaskOutcome run_validate(const Config& cfg) {
  ValidationOptions opts;
  if (cfg.has("run.seed")) opts.seed = cfg.seed("run.seed");
  opts.quick = cfg.flag("validate.quick", false);
  TaskOutcome out{ResultTable({{"check"}, {"passed"}, {"value"}, {"tolerance"}, {"detail"}})};
  for (const CheckResult& c : property_suite(opts)) {
    out.table.add_row({c.name, c.passed, c.value, c.tolerance, c.detail});
    if (!c.passed) out.validation_failed = true;
  }
  return out;
}

}  // namespace

TaskOutcome run_task(const std::string& task, const Config& cfg, int workers) {
  if (workers < 1) throw ConfigError("--workers must be >= 1");
  if (task == "potential") return run_potential(cfg, workers);
  if (task == "se") return run_se(cfg, workers);
  if (task == "errors") return run_errors(cfg, workers);
  if (task == "gamp") return run_gamp(cfg, workers);
  if (task == "phase-diagram") return run_phase_diagram(cfg, workers);
  if (task == "validate") return run_validate(cfg);
  throw ConfigError("unknown task '" + task + "'");
}

}  // namespace glmphase::cli
