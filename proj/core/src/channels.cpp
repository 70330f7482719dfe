#include "glmphase/channels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "glmphase/errors.hpp"
#include "glmphase/numerics.hpp"
#include "glmphase/special.hpp"

namespace glmphase {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kInnerTol = 1e-10;
constexpr double kOuterTol = 1e-10;
// Output ranges extend this many standard deviations past each Gaussian bump.
constexpr double kTailSigmas = 12.0;

void check_delta(double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta))
    throw DomainError("Channel: delta must be finite and nonnegative");
}

}  // namespace

Channel Channel::linear(double delta) {
  check_delta(delta);
  Channel c;
  c.kind_ = ChannelKind::Linear;
  c.delta_ = delta;
  c.build();
  return c;
}

Channel Channel::sign(double delta) {
  check_delta(delta);
  Channel c;
  c.kind_ = ChannelKind::Sign;
  c.delta_ = delta;
  c.build();
  return c;
}

Channel Channel::abs(double delta) {
  check_delta(delta);
  Channel c;
  c.kind_ = ChannelKind::Abs;
  c.delta_ = delta;
  c.build();
  return c;
}

Channel Channel::relu(double delta) {
  check_delta(delta);
  if (delta == 0.0) throw DomainError("Channel::relu: delta must be > 0");
  Channel c;
  c.kind_ = ChannelKind::ReLU;
  c.delta_ = delta;
  c.build();
  return c;
}

Channel Channel::door(double threshold, double delta) {
  check_delta(delta);
  if (!(threshold > 0.0) || !std::isfinite(threshold))
    throw DomainError("Channel::door: threshold must be positive");
  Channel c;
  c.kind_ = ChannelKind::Door;
  c.delta_ = delta;
  c.threshold_ = threshold;
  c.build();
  return c;
}

Channel Channel::sigmoid(double slope) {
  if (!(slope > 0.0) || !std::isfinite(slope))
    throw DomainError("Channel::sigmoid: slope must be positive");
  Channel c;
  c.kind_ = ChannelKind::Sigmoid;
  c.slope_ = slope;
  c.build();
  return c;
}

Channel Channel::with_epsilon(double epsilon) const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon))
    throw DomainError("Channel::with_epsilon: epsilon must be finite and nonnegative");
  Channel c = *this;
  c.epsilon_ = epsilon;
  c.build();
  return c;
}

Channel Channel::with_delta(double delta) const {
  check_delta(delta);
  if (kind_ == ChannelKind::Sigmoid) throw DomainError("Channel::with_delta: Sigmoid has no noise level");
  if (kind_ == ChannelKind::ReLU && delta == 0.0)
    throw DomainError("Channel::with_delta: ReLU requires delta > 0");
  Channel c = *this;
  c.delta_ = delta;
  c.build();
  return c;
}

void Channel::build() {
  const double eps = epsilon_;
  switch (kind_) {
    case ChannelKind::Linear:
      pieces_ = {{-kInf, kInf, 1.0, 0.0}};
      break;
    case ChannelKind::Sign:
      pieces_ = {{-kInf, eps, 0.0, -1.0}, {eps, kInf, 0.0, 1.0}};
      break;
    case ChannelKind::Abs:
      pieces_ = {{-kInf, -eps, -1.0, 0.0}, {-eps, kInf, 1.0, 0.0}};
      break;
    case ChannelKind::ReLU:
      pieces_ = {{-kInf, 0.0, 0.0, 0.0}, {0.0, kInf, 1.0, 0.0}};
      break;
    case ChannelKind::Door: {
      const double k = threshold_;
      pieces_ = {{-kInf, -k, 0.0, 1.0}, {-k, k + eps, 0.0, -1.0}, {k + eps, kInf, 0.0, 1.0}};
      break;
    }
    case ChannelKind::Sigmoid:
      pieces_.clear();
      break;
  }
  const bool binary = kind_ == ChannelKind::Sigmoid ||
                      ((kind_ == ChannelKind::Sign || kind_ == ChannelKind::Door) && delta_ == 0.0);
  labels_ = binary ? std::vector<double>{-1.0, 1.0} : std::vector<double>{};
}

std::vector<double> Channel::kinks() const {
  switch (kind_) {
    case ChannelKind::Linear:
      return {};
    case ChannelKind::Sign:
      return {epsilon_};
    case ChannelKind::Abs:
      return {-epsilon_};
    case ChannelKind::ReLU:
    case ChannelKind::Sigmoid:
      return {0.0};
    case ChannelKind::Door:
      return {-threshold_, threshold_ + epsilon_};
  }
  return {};
}

namespace {

double phi_of(const Channel& ch, double z) {
  if (ch.kind() == ChannelKind::Door)
    return (z <= -ch.threshold() || z >= ch.threshold() + ch.epsilon()) ? 1.0 : -1.0;
  const auto& pieces = ch.pieces();
  for (const Piece& p : pieces)
    if (z < p.hi) return p.slope * z + p.offset;
  const Piece& last = pieces.back();
  return last.slope * z + last.offset;
}

double sigmoid_prob(const Channel& ch, double y, double z) {
  return special::logistic(ch.slope() * y * z);
}

}  // namespace

double Channel::mean_output(double z) const {
  if (kind_ == ChannelKind::Sigmoid) return 2.0 * special::logistic(slope_ * z) - 1.0;
  return phi_of(*this, z);
}

double Channel::second_output(double z) const {
  if (kind_ == ChannelKind::Sigmoid) return 1.0;
  const double p = phi_of(*this, z);
  return p * p;
}

double Channel::draw(double z, std::mt19937_64& rng) const {
  if (kind_ == ChannelKind::Sigmoid) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    return unif(rng) <= special::logistic(slope_ * z) ? 1.0 : -1.0;
  }
  double y = phi_of(*this, z);
  if (delta_ > 0.0) {
    std::normal_distribution<double> normal(0.0, std::sqrt(delta_));
    y += normal(rng);
  }
  return y;
}

std::string Channel::describe() const {
  std::ostringstream out;
  switch (kind_) {
    case ChannelKind::Linear:
      out << "linear(delta=" << format_shortest(delta_) << ")";
      break;
    case ChannelKind::Sign:
      out << "sign(delta=" << format_shortest(delta_);
      break;
    case ChannelKind::Abs:
      out << "abs(delta=" << format_shortest(delta_);
      break;
    case ChannelKind::ReLU:
      out << "relu(delta=" << format_shortest(delta_) << ")";
      break;
    case ChannelKind::Door:
      out << "door(K=" << format_shortest(threshold_) << ", delta=" << format_shortest(delta_);
      break;
    case ChannelKind::Sigmoid:
      out << "sigmoid(slope=" << format_shortest(slope_) << ")";
      break;
  }
  if (kind_ == ChannelKind::Sign || kind_ == ChannelKind::Abs || kind_ == ChannelKind::Door) {
    if (epsilon_ > 0.0) out << ", epsilon=" << format_shortest(epsilon_);
    out << ")";
  }
  return out.str();
}

double sample_label(const Channel& channel, double z, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return channel.draw(z, rng);
}

double density(const Channel& channel, double y, double z) {
  if (channel.kind() == ChannelKind::Sigmoid)
    return (y == 1.0 || y == -1.0) ? sigmoid_prob(channel, y, z) : 0.0;
  if (channel.is_discrete()) return y == phi_of(channel, z) ? 1.0 : 0.0;
  if (channel.delta() == 0.0)
    throw DomainError("density: noiseless continuous channel has no density");
  return special::gaussian_density(y, phi_of(channel, z), channel.delta());
}

namespace {

struct Branch {
  double log_weight;
  double mean_dz;    // E[z - omega | branch]
  double second_dz;  // E[(z - omega)^2 | branch]
  double mean_phi;
  double excess_dz;  // second_dz - V
};

// z ~ N(omega + d, s^2) restricted to [lo, hi): log-mass and moments relative to omega.
// The shift d is passed separately so small posterior corrections keep full precision.
// s2_minus_V = s^2 - V, supplied exactly by the caller.
Branch truncated_branch(double log_scale, double d, double s, double s2_minus_V, double lo, double hi,
                        double omega, double slope, double offset) {
  const double m = omega + d;
  const double a = std::isinf(lo) ? lo : (lo - m) / s;
  const double b = std::isinf(hi) ? hi : (hi - m) / s;
  const special::TruncatedMoments t = special::truncated_normal(a, b);
  Branch br;
  br.log_weight = log_scale + t.log_mass;
  br.mean_dz = d + s * t.mean;
  br.second_dz = d * d + 2.0 * d * s * t.mean + s * s * t.second;
  br.mean_phi = slope * (m + s * t.mean) + offset;
  br.excess_dz = d * d + 2.0 * d * s * t.mean + s * s * t.excess + s2_minus_V;
  return br;
}

ScalarPosterior combine(const std::vector<Branch>& branches, double V) {
  double max_log = -kInf;
  for (const Branch& b : branches) max_log = std::max(max_log, b.log_weight);
  if (max_log == -kInf) return {-kInf, 0.0, 0.0, 0.0, -1.0};
  double total = 0.0, m1 = 0.0, m2 = 0.0, mp = 0.0, ex = 0.0;
  for (const Branch& b : branches) {
    const double w = std::exp(b.log_weight - max_log);
    total += w;
    m1 += w * b.mean_dz;
    m2 += w * b.second_dz;
    mp += w * b.mean_phi;
    ex += w * b.excess_dz;
  }
  const double sd = std::sqrt(V);
  return {max_log + std::log(total), m1 / total / sd, m2 / total / V, mp / total, ex / total / V};
}

ScalarPosterior sigmoid_posterior(const Channel& ch, double y, double omega, double V) {
  if (V == 0.0) return {std::log(sigmoid_prob(ch, y, omega)), 0.0, 0.0, y, -1.0};
  const double sd = std::sqrt(V);
  std::vector<double> cuts;
  add_feature(cuts, -omega / sd, 1.0 / (ch.slope() * sd));
  auto p = [&](double w) { return sigmoid_prob(ch, y, omega + sd * w); };
  const double z = expect_normal(p, cuts, kInnerTol);
  const double m1 = expect_normal([&](double w) { return w * p(w); }, cuts, kInnerTol);
  const double m2 = expect_normal([&](double w) { return w * w * p(w); }, cuts, kInnerTol);
  const double m2_excess = expect_normal([&](double w) { return (w * w - 1.0) * p(w); }, cuts, kInnerTol);
  return {std::log(z), m1 / z, m2 / z, y, m2_excess / z};
}

}  // namespace

ScalarPosterior output_posterior(const Channel& channel, double y, double omega, double V) {
  if (!(V >= 0.0)) throw DomainError("output_posterior: V must be nonnegative");
  if (channel.kind() == ChannelKind::Sigmoid) return sigmoid_posterior(channel, y, omega, V);

  const double delta = channel.delta();
  if (V == 0.0) {
    const double p = density(channel, y, omega);
    return {std::log(p), 0.0, 0.0, phi_of(channel, omega), -1.0};
  }

  std::vector<Branch> branches;
  branches.reserve(channel.pieces().size());
  const double sd = std::sqrt(V);
  if (delta > 0.0) {
    for (const Piece& p : channel.pieces()) {
      const double a = p.slope;
      const double var_y = a * a * V + delta;
      const double center = a * omega + p.offset;
      const double d = a * V * (y - center) / var_y;
      const double s = std::sqrt(V * delta / var_y);
      branches.push_back(truncated_branch(special::log_gaussian_density(y, center, var_y), d, s,
                                          -a * a * V * V / var_y, p.lo, p.hi, omega, a, p.offset));
    }
    return combine(branches, V);
  }

  // Noiseless: atoms (flat pieces hit exactly) take precedence over densities.
  for (const Piece& p : channel.pieces())
    if (p.slope == 0.0 && p.offset == y)
      branches.push_back(truncated_branch(0.0, 0.0, sd, 0.0, p.lo, p.hi, omega, 0.0, p.offset));
  if (branches.empty()) {
    for (const Piece& p : channel.pieces()) {
      if (p.slope == 0.0) continue;
      const double z0 = (y - p.offset) / p.slope;
      if (!(z0 >= p.lo && z0 < p.hi)) continue;
      const double d = z0 - omega;
      branches.push_back({special::log_gaussian_density(z0, omega, V) - std::log(std::abs(p.slope)),
                          d, d * d, y, d * d - V});
    }
  }
  return combine(branches, V);
}

double zout(const Channel& channel, double y, double omega, double V) {
  return std::exp(output_posterior(channel, y, omega, V).log_z);
}

OutputDenoiser gout(const Channel& channel, double y, double omega, double V) {
  if (!(V > 0.0)) throw DomainError("gout: V must be positive");
  const ScalarPosterior post = output_posterior(channel, y, omega, V);
  if (post.log_z == -kInf)
    throw EvidenceUnderflowError(
        "gout: zero evidence for y=" + std::to_string(y) + " at omega=" + std::to_string(omega) +
        "; increase damping or the channel epsilon");
  return {post.mean_w, std::exp(post.log_z), post.log_z, post.second_w,
          post.mean_w * post.mean_w - post.excess_w};
}

double output_average(const Channel& channel, double omega, double V,
                      const std::function<double(const ScalarPosterior&)>& F) {
  auto weighted = [&](double y) {
    const ScalarPosterior post = output_posterior(channel, y, omega, V);
    if (post.log_z == -kInf) return 0.0;
    return std::exp(post.log_z) * F(post);
  };

  if (channel.is_discrete()) {
    double total = 0.0;
    for (double y : channel.labels()) total += weighted(y);
    return total;
  }

  const double delta = channel.delta();
  if (delta > 0.0) {
    std::vector<double> cuts;
    double lo = kInf, hi = -kInf;
    const double noise_sd = std::sqrt(delta);
    for (const Piece& p : channel.pieces()) {
      const double a = p.slope;
      if (a == 0.0) {
        add_feature(cuts, p.offset, noise_sd);
        lo = std::min(lo, p.offset - kTailSigmas * noise_sd);
        hi = std::max(hi, p.offset + kTailSigmas * noise_sd);
        continue;
      }
      const double center = a * omega + p.offset;
      const double spread = std::sqrt(a * a * V + delta);
      add_feature(cuts, center, spread);
      lo = std::min(lo, center - kTailSigmas * spread);
      hi = std::max(hi, center + kTailSigmas * spread);
      const double edge_width =
          V > 0.0 ? std::min(spread, spread * noise_sd / (std::abs(a) * std::sqrt(V))) : noise_sd;
      for (double e : {p.lo, p.hi})
        if (std::isfinite(e)) add_feature(cuts, a * e + p.offset, edge_width);
    }
    return integrate_gk(weighted, lo, hi, cuts, kInnerTol);
  }

  // Noiseless continuous output: integrate over the hidden Gaussian instead of y.
  if (!(V > 0.0)) throw DomainError("output_average: noiseless continuous channel needs V > 0");
  const double sd = std::sqrt(V);
  std::vector<double> cuts;
  for (double k : channel.kinks()) cuts.push_back((k - omega) / sd);
  return expect_normal([&](double w) {
    const ScalarPosterior post = output_posterior(channel, phi_of(channel, omega + sd * w), omega, V);
    return F(post);
  },
                       cuts, kInnerTol);
}

namespace {

void check_overlap(double q, double rho, const char* who) {
  if (!(rho > 0.0)) throw DomainError(std::string(who) + ": rho must be positive");
  if (!(q >= 0.0 && q <= rho)) throw DomainError(std::string(who) + ": q must lie in [0, rho]");
}

}  // namespace

double scalar_channel_average(const Channel& channel, double q, double rho,
                              const std::function<double(const ScalarPosterior&)>& F) {
  check_overlap(q, rho, "scalar_channel_average");
  const double V = rho - q;
  if (q == 0.0) return output_average(channel, 0.0, V, F);
  const double sq = std::sqrt(q);
  double width = std::sqrt(V + channel.delta());
  if (channel.kind() == ChannelKind::Sigmoid) width = std::max(std::sqrt(V), 1.0 / channel.slope());
  std::vector<double> cuts;
  for (double k : channel.kinks()) add_feature(cuts, k / sq, width / sq);
  return expect_normal([&](double v) { return output_average(channel, sq * v, V, F); }, cuts,
                       kOuterTol);
}

double psi_pout(const Channel& channel, double q, double rho) {
  check_overlap(q, rho, "psi_pout");
  const double delta = channel.delta();
  if (channel.kind() == ChannelKind::Linear) {
    const double var = delta + rho - q;
    if (var == 0.0) return kInf;
    return -0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * var);
  }
  if (q == rho) {
    if (channel.kind() == ChannelKind::Sigmoid) {
      const double sr = std::sqrt(rho);
      return expect_normal([&](double v) {
        const double f = special::logistic(channel.slope() * sr * v);
        const double g = 1.0 - f;
        return (f > 0.0 ? f * std::log(f) : 0.0) + (g > 0.0 ? g * std::log(g) : 0.0);
      },
                           std::vector<double>{0.0}, kOuterTol);
    }
    if (channel.is_discrete()) return 0.0;
    if (delta == 0.0) return kInf;
    return -0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e * delta);
  }
  return scalar_channel_average(channel, q, rho,
                                [](const ScalarPosterior& p) { return p.log_z; });
}

double psi_pout_prime(const Channel& channel, double q, double rho) {
  check_overlap(q, rho, "psi_pout_prime");
  if (q == rho) throw DomainError("psi_pout_prime: requires q < rho");
  const double V = rho - q;
  if (channel.kind() == ChannelKind::Linear) return 0.5 / (channel.delta() + V);
  const double avg = scalar_channel_average(
      channel, q, rho, [](const ScalarPosterior& p) { return p.mean_w * p.mean_w; });
  return avg / (2.0 * V);
}

double stability_integral(const Channel& channel, double rho) {
  if (!channel.is_even()) throw DomainError("stability_integral: channel must be even");
  if (!(rho > 0.0)) throw DomainError("stability_integral: rho must be positive");
  return output_average(channel, 0.0, rho, [](const ScalarPosterior& p) {
    return p.excess_w * p.excess_w;
  });
}

}  // namespace glmphase
