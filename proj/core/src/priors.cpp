#include "glmphase/priors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "glmphase/errors.hpp"
#include "glmphase/numerics.hpp"
#include "glmphase/special.hpp"

namespace glmphase {

Prior Prior::gaussian(double variance) {
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw DomainError("Prior::gaussian: variance must be positive");
  Prior p;
  p.kind_ = PriorKind::Gaussian;
  p.parameter_ = variance;
  p.gauss_weight_ = 1.0;
  p.gauss_variance_ = variance;
  p.finalize();
  return p;
}

Prior Prior::rademacher(double p_plus) {
  if (!(p_plus > 0.0 && p_plus < 1.0))
    throw DomainError("Prior::rademacher: p_plus must lie in (0, 1)");
  Prior p;
  p.kind_ = PriorKind::Rademacher;
  p.parameter_ = p_plus;
  p.atoms_ = {-1.0, 1.0};
  p.atom_probs_ = {1.0 - p_plus, p_plus};
  p.finalize();
  return p;
}

Prior Prior::gauss_bernoulli(double sparsity) {
  if (!(sparsity > 0.0 && sparsity <= 1.0))
    throw DomainError("Prior::gauss_bernoulli: sparsity must lie in (0, 1]");
  Prior p;
  p.kind_ = PriorKind::GaussBernoulli;
  p.parameter_ = sparsity;
  if (sparsity < 1.0) {
    p.atoms_ = {0.0};
    p.atom_probs_ = {1.0 - sparsity};
  }
  p.gauss_weight_ = sparsity;
  p.gauss_variance_ = 1.0;
  p.finalize();
  return p;
}

Prior Prior::two_point(double value_a, double value_b, double prob_a) {
  if (!(prob_a > 0.0 && prob_a < 1.0))
    throw DomainError("Prior::two_point: prob_a must lie in (0, 1)");
  if (!std::isfinite(value_a) || !std::isfinite(value_b) || value_a == value_b)
    throw DomainError("Prior::two_point: values must be finite and distinct");
  Prior p;
  p.kind_ = PriorKind::TwoPoint;
  p.parameter_ = prob_a;
  p.atoms_ = {value_a, value_b};
  p.atom_probs_ = {prob_a, 1.0 - prob_a};
  p.finalize();
  return p;
}

void Prior::finalize() {
  mean_ = 0.0;
  second_moment_ = gauss_weight_ * gauss_variance_;
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    mean_ += atom_probs_[k] * atoms_[k];
    second_moment_ += atom_probs_[k] * atoms_[k] * atoms_[k];
  }
  if (!(second_moment_ > 0.0)) throw DomainError("Prior: second moment must be positive");
}

std::string Prior::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case PriorKind::Gaussian:
      out << "gaussian(variance=" << format_shortest(parameter_) << ")";
      break;
    case PriorKind::Rademacher:
      out << "rademacher(p_plus=" << format_shortest(parameter_) << ")";
      break;
    case PriorKind::GaussBernoulli:
      out << "gauss_bernoulli(sparsity=" << format_shortest(parameter_) << ")";
      break;
    case PriorKind::TwoPoint:
      out << "two_point(a=" << format_shortest(atoms_[0]) << ", b=" << format_shortest(atoms_[1])
          << ", prob_a=" << format_shortest(parameter_) << ")";
      break;
  }
  return out.str();
}

double Prior::draw(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    if (u < atom_probs_[k]) return atoms_[k];
    u -= atom_probs_[k];
  }
  if (gauss_weight_ > 0.0) {
    std::normal_distribution<double> normal(0.0, std::sqrt(gauss_variance_));
    return normal(rng);
  }
  return atoms_.back();
}

std::vector<double> sample(const Prior& prior, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw DomainError("sample: count must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<double> out(count);
  for (double& x : out) x = prior.draw(rng);
  return out;
}

namespace {

// Log-weight of each mixture component under the tilt, with its posterior moments.
struct Component {
  double log_weight;
  double mean;
  double variance;
};

template <class Visit>
void for_each_component(const Prior& prior, double field, double precision, Visit&& visit) {
  const auto& atoms = prior.atoms();
  const auto& probs = prior.atom_probs();
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const double x = atoms[k];
    visit(Component{std::log(probs[k]) + field * x - 0.5 * precision * x * x, x, 0.0});
  }
  if (prior.gauss_weight() > 0.0) {
    const double s = prior.gauss_variance();
    const double denom = 1.0 + precision * s;
    visit(Component{std::log(prior.gauss_weight()) - 0.5 * std::log(denom) +
                        0.5 * s * field * field / denom,
                    s * field / denom, s / denom});
  }
}

}  // namespace

TiltedMoments tilted_moments(const Prior& prior, double field, double precision) {
  double max_log = -std::numeric_limits<double>::infinity();
  for_each_component(prior, field, precision,
                     [&](const Component& c) { max_log = std::max(max_log, c.log_weight); });
  double total = 0.0, first = 0.0, var_within = 0.0;
  for_each_component(prior, field, precision, [&](const Component& c) {
    const double w = std::exp(c.log_weight - max_log);
    total += w;
    first += w * c.mean;
    var_within += w * c.variance;
  });
  const double mean = first / total;
  double spread = 0.0;
  for_each_component(prior, field, precision, [&](const Component& c) {
    const double d = c.mean - mean;
    spread += std::exp(c.log_weight - max_log) * d * d;
  });
  return {max_log + std::log(total), mean, (var_within + spread) / total};
}

DenoiserOutput denoise(const Prior& prior, double R, double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("denoise: lambda must be nonnegative");
  if (lambda == 0.0) return {prior.mean(), prior.variance()};
  const TiltedMoments m = tilted_moments(prior, lambda * R, lambda);
  return {m.mean, m.variance};
}

namespace {

// Values of Y0 where the dominant posterior component switches, with the
// width of the switch.
struct Switch {
  double y;
  double width;
};

std::vector<Switch> dominance_switches(const Prior& prior, double r) {
  std::vector<Switch> out;
  const double sr = std::sqrt(r);
  const auto& atoms = prior.atoms();
  const auto& probs = prior.atom_probs();
  for (std::size_t j = 0; j < atoms.size(); ++j) {
    for (std::size_t k = j + 1; k < atoms.size(); ++k) {
      const double dx = atoms[j] - atoms[k];
      const double y = (0.5 * r * (atoms[j] * atoms[j] - atoms[k] * atoms[k]) +
                        std::log(probs[k] / probs[j])) /
                       (sr * dx);
      out.push_back({y, 1.0 / (sr * std::abs(dx))});
    }
  }
  if (prior.gauss_weight() > 0.0) {
    // Gaussian component log-weight: log w - log(1+rs)/2 + s r y^2 / (2 (1+rs)).
    const double s = prior.gauss_variance();
    const double c2 = 0.5 * s * r / (1.0 + r * s);
    const double c0 = std::log(prior.gauss_weight()) - 0.5 * std::log1p(r * s);
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      // Atom: log p + sqrt(r) y x - r x^2/2. Solve c2 y^2 - sqrt(r) x y + (c0 - log p + r x^2/2) = 0.
      const double x = atoms[k];
      const double b = -sr * x;
      const double c = c0 - std::log(probs[k]) + 0.5 * r * x * x;
      const double disc = b * b - 4.0 * c2 * c;
      if (disc < 0.0) continue;
      const double sq = std::sqrt(disc);
      for (double y : {(-b - sq) / (2.0 * c2), (-b + sq) / (2.0 * c2)}) {
        const double slope = std::abs(2.0 * c2 * y + b);
        out.push_back({y, slope > 0.0 ? std::min(1.0, 1.0 / slope) : 1.0});
      }
    }
  }
  return out;
}

// E over Y0 = sqrt(r) X0 + Z0 of h(Y0), split by the mixture component of X0.
template <class H>
double expect_y0(const Prior& prior, double r, H&& h) {
  const double sr = std::sqrt(r);
  const auto switches = dominance_switches(prior, r);
  double total = 0.0;
  const auto& atoms = prior.atoms();
  const auto& probs = prior.atom_probs();
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const double shift = sr * atoms[k];
    std::vector<double> cuts;
    for (const Switch& s : switches) add_feature(cuts, s.y - shift, s.width);
    total += probs[k] * expect_normal([&](double z) { return h(shift + z); }, cuts);
  }
  if (prior.gauss_weight() > 0.0) {
    const double scale = std::sqrt(1.0 + r * prior.gauss_variance());
    std::vector<double> cuts;
    for (const Switch& s : switches) add_feature(cuts, s.y / scale, s.width / scale);
    total += prior.gauss_weight() *
             expect_normal([&](double v) { return h(scale * v); }, cuts);
  }
  return total;
}

double clamp_snr(double r, const char* who) {
  if (!(r >= 0.0)) throw DomainError(std::string(who) + ": r must be nonnegative");
  return std::min(r, kSnrCap);
}

}  // namespace

double psi_p0(const Prior& prior, double r) {
  r = clamp_snr(r, "psi_p0");
  if (r == 0.0) return 0.0;
  const double sr = std::sqrt(r);
  return expect_y0(prior, r,
                   [&](double y) { return tilted_moments(prior, sr * y, r).log_norm; });
}

double psi_p0_prime(const Prior& prior, double r) {
  r = clamp_snr(r, "psi_p0_prime");
  if (r == 0.0) return 0.5 * prior.mean() * prior.mean();
  const double sr = std::sqrt(r);
  return 0.5 * expect_y0(prior, r, [&](double y) {
           const double m = tilted_moments(prior, sr * y, r).mean;
           return m * m;
         });
}

double mutual_info_p0(const Prior& prior, double r) {
  r = clamp_snr(r, "mutual_info_p0");
  return 0.5 * r * prior.second_moment() - psi_p0(prior, r);
}

}  // namespace glmphase
