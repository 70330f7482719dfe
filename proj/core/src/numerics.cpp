#include "glmphase/numerics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <queue>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "glmphase/errors.hpp"

namespace glmphase {

namespace {

// Orthonormal (w.r.t. N(0,1)) Hermite values p_0..p_{n} at x via the three-term recurrence.
void orthonormal_hermite(double x, int n, double& pn, double& pn_minus1, double& sum_sq) {
  double p_prev = 0.0;
  double p = 1.0;
  sum_sq = 0.0;
  for (int k = 0; k < n; ++k) {
    sum_sq += p * p;
    const double next = (x * p - std::sqrt(static_cast<double>(k)) * p_prev) /
                        std::sqrt(static_cast<double>(k + 1));
    p_prev = p;
    p = next;
  }
  pn = p;
  pn_minus1 = p_prev;
}

struct SimpsonFrame {
  const std::function<double(double)>* f;
  int evaluations = 0;
};

double sample(SimpsonFrame& frame, double x) {
  const double v = (*frame.f)(x);
  ++frame.evaluations;
  if (!std::isfinite(v)) throw QuadratureError("non-finite integrand", x);
  return v;
}

double simpson_recurse(SimpsonFrame& frame, double a, double b, double fa, double fm, double fb,
                       double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = sample(frame, lm);
  const double frm = sample(frame, rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_recurse(frame, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_recurse(frame, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

QuadratureRule gauss_hermite(int order) {
  if (order < 1) throw DomainError("gauss_hermite: order must be >= 1");
  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  if (order == 1) {
    rule.nodes[0] = 0.0;
    rule.weights[0] = 1.0;
    return rule;
  }

  // Golub-Welsch for the initial nodes, then Newton polish on the orthonormal
  // recurrence and Christoffel weights 1 / sum_k p_k(x)^2.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(order);
  Eigen::VectorXd sub(order - 1);
  for (int k = 1; k < order; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
  solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& eig = solver.eigenvalues();

  for (int i = 0; i < order; ++i) {
    double x = eig[i];
    for (int it = 0; it < 20; ++it) {
      double pn, pn1, s;
      orthonormal_hermite(x, order, pn, pn1, s);
      const double dp = std::sqrt(static_cast<double>(order)) * pn1;
      const double step = pn / dp;
      x -= step;
      if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(x))) break;
    }
    double pn, pn1, s;
    orthonormal_hermite(x, order, pn, pn1, s);
    rule.nodes[i] = x;
    rule.weights[i] = 1.0 / s;
  }

  // Enforce exact symmetry and unit mass.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  double total = 0.0;
  for (double w : rule.weights) total += w;
  for (double& w : rule.weights) w /= total;
  return rule;
}

const QuadratureRule& default_hermite_rule() {
  static const QuadratureRule rule = gauss_hermite(kDefaultHermiteOrder);
  return rule;
}

double integrate_1d(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(lo < hi)) throw DomainError("integrate_1d: requires lo < hi");
  if (!(tol > 0.0)) throw DomainError("integrate_1d: tol must be positive");
  SimpsonFrame frame{&f};
  const double fa = sample(frame, lo);
  const double fb = sample(frame, hi);
  const double m = 0.5 * (lo + hi);
  const double fm = sample(frame, m);
  const double whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_recurse(frame, lo, hi, fa, fm, fb, whole, tol, 50);
}

double integrate_gk(const std::function<double(double)>& f, double lo, double hi,
                    std::span<const double> breakpoints, double rel_tol) {
  if (!(lo < hi)) return 0.0;
  std::vector<double> cuts;
  cuts.reserve(breakpoints.size() + 2);
  cuts.push_back(lo);
  for (double b : breakpoints)
    if (b > lo && b < hi) cuts.push_back(b);
  cuts.push_back(hi);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto checked = [&f](double x) {
    const double v = f(x);
    if (!std::isfinite(v)) throw QuadratureError("non-finite integrand", x);
    return v;
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 15>;
  struct Segment {
    double a, b, value, error, l1;
    bool operator<(const Segment& o) const { return error < o.error; }
  };
  auto rule = [&checked](double a, double b) {
    Segment s{a, b, 0.0, 0.0, 0.0};
    s.value = GK::integrate(checked, a, b, 0, 0.0, &s.error, &s.l1);
    // Boost scales the L1 norm of a leaf to [a, b] but reports its error on [-1, 1].
    s.error *= 0.5 * (b - a);
    return s;
  };

  // Globally adaptive: always bisect the segment with the largest error estimate.
  std::priority_queue<Segment> heap;
  double value = 0.0, error = 0.0, l1 = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const Segment s = rule(cuts[i], cuts[i + 1]);
    value += s.value;
    error += s.error;
    l1 += s.l1;
    heap.push(s);
  }
  constexpr int kMaxSubdivisions = 2000;
  for (int it = 0; it < kMaxSubdivisions && error > rel_tol * l1 && !heap.empty(); ++it) {
    const Segment worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    heap.pop();
    const Segment left = rule(worst.a, mid);
    const Segment right = rule(mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    l1 += left.l1 + right.l1 - worst.l1;
    heap.push(left);
    heap.push(right);
  }
  return value;
}

double expect_normal(const std::function<double(double)>& f, std::span<const double> breakpoints,
                     double rel_tol) {
  constexpr double kRange = 10.0;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return integrate_gk([&f, inv_sqrt_2pi](double v) {
    return f(v) * inv_sqrt_2pi * std::exp(-0.5 * v * v);
  },
                      -kRange, kRange, breakpoints, rel_tol);
}

void add_feature(std::vector<double>& breakpoints, double center, double width) {
  breakpoints.push_back(center);
  if (!(width > 0.0) || !std::isfinite(width)) return;
  for (double k : {1.0, 4.0, 16.0, 64.0}) {
    breakpoints.push_back(center - k * width);
    breakpoints.push_back(center + k * width);
  }
}

double bisect(const std::function<double(double)>& f, double lo, double hi, double tol) {
  if (!(tol > 0.0)) throw DomainError("bisect: tol must be positive");
  if (lo > hi) std::swap(lo, hi);
  double flo = f(lo);
  const double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (std::signbit(flo) == std::signbit(fhi))
    throw BracketError("bisect: no sign change on [" + std::to_string(lo) + ", " +
                       std::to_string(hi) + "]");
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (std::signbit(fm) == std::signbit(flo)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void FixedPointOptions::validate() const {
  if (!(damping >= 0.0 && damping < 1.0))
    throw DomainError("FixedPointOptions: damping must lie in [0, 1)");
  if (!(tol > 0.0)) throw DomainError("FixedPointOptions: tol must be positive");
  if (max_iter < 1) throw DomainError("FixedPointOptions: max_iter must be >= 1");
}

FixedPointResult damped_fixed_point(const std::function<double(double)>& F, double x0,
                                    const FixedPointOptions& opts) {
  opts.validate();
  std::vector<double> trajectory{x0};
  double x = x0;
  for (int t = 1; t <= opts.max_iter; ++t) {
    const double next = (1.0 - opts.damping) * F(x) + opts.damping * x;
    if (!std::isfinite(next)) {
      trajectory.push_back(next);
      throw DivergenceError("damped_fixed_point: non-finite iterate", std::move(trajectory));
    }
    if (trajectory.size() < 64) trajectory.push_back(next);
    const double step = std::abs(next - x);
    x = next;
    if (step < opts.tol) return {x, t, true};
  }
  return {x, opts.max_iter, false};
}

double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                          double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::string format_shortest(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace glmphase
