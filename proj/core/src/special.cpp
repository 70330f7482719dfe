#include "glmphase/special.hpp"

#include <algorithm>
#include <limits>

namespace glmphase::special {

double mills_ratio(double t) {
  // erfc keeps full relative accuracy until the pdf underflows.
  if (t < 37.0) return normal_cdf(-t) / normal_pdf(t);
  // Laplace continued fraction 1/(t + 1/(t + 2/(t + 3/(t + ...)))).
  double frac = t;
  for (int k = 20; k >= 1; --k) frac = t + k / frac;
  return 1.0 / frac;
}

double log_normal_cdf(double x) {
  if (x > -5.0) return std::log(normal_cdf(x));
  return log_normal_pdf(x) + std::log(mills_ratio(-x));
}

namespace {

// Handles a < b <= 0 (lower tail) and a < 0 < b (straddling).
TruncatedMoments truncated_lower(double a, double b) {
  double log_mass;
  if (b <= 0.0) {
    const double lb = log_normal_cdf(b);
    const double la = std::isinf(a) ? -INFINITY : log_normal_cdf(a);
    const double ratio = std::exp(la - lb);
    log_mass = lb + std::log1p(-ratio);
  } else {
    const double mass = 0.5 * (std::erf(b / std::numbers::sqrt2) - std::erf(a / std::numbers::sqrt2));
    log_mass = std::log(mass);
  }
  auto scaled_pdf = [log_mass](double x) {
    return std::isinf(x) ? 0.0 : std::exp(log_normal_pdf(x) - log_mass);
  };
  auto scaled_xpdf = [log_mass](double x) {
    return std::isinf(x) ? 0.0 : x * std::exp(log_normal_pdf(x) - log_mass);
  };
  TruncatedMoments m;
  m.log_mass = log_mass;
  m.mean = scaled_pdf(a) - scaled_pdf(b);
  m.excess = scaled_xpdf(a) - scaled_xpdf(b);
  // Guard against roundoff when the interval is narrow relative to the tail.
  m.excess = std::max(m.excess, m.mean * m.mean - 1.0);
  m.second = 1.0 + m.excess;
  if (std::isfinite(a)) m.mean = std::max(m.mean, a);
  if (std::isfinite(b)) m.mean = std::min(m.mean, b);
  return m;
}

}  // namespace

TruncatedMoments truncated_normal(double a, double b) {
  if (!(a < b)) return {-INFINITY, 0.0, 0.0, -1.0};
  if (a >= 0.0) {
    TruncatedMoments m = truncated_lower(-b, -a);
    m.mean = -m.mean;
    return m;
  }
  return truncated_lower(a, b);
}

}  // namespace glmphase::special
