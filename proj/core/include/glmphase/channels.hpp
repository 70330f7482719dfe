#pragma once

// Output channels P_out(y | z) = E_A N(y; phi(z, A), Delta) and the scalar
// inference channel  Y ~ P_out(. | omega + sqrt(V) W),  W ~ N(0,1).

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace glmphase {

enum class ChannelKind { Linear, Sign, Abs, ReLU, Door, Sigmoid };

/// phi(z) = slope * z + offset for z in [lo, hi).
struct Piece {
  double lo;
  double hi;
  double slope;
  double offset;
};

class Channel {
 public:
  static Channel linear(double delta);
  static Channel sign(double delta = 0.0);
  static Channel abs(double delta = 0.0);
  /// Requires delta > 0.
  static Channel relu(double delta);
  /// phi(z) = sign(|z| - K), with sign(0) = +1.
  static Channel door(double threshold, double delta = 0.0);
  /// Label +1 with probability 1 / (1 + exp(-slope z)), else -1.
  static Channel sigmoid(double slope);

  /// Copy with an asymmetry epsilon >= 0 shifting one decision edge: Door's
  /// upper edge K -> K + eps, Abs's fold 0 -> -eps, Sign's threshold 0 -> eps.
  /// Linear, ReLU and Sigmoid are unaffected.
  Channel with_epsilon(double epsilon) const;
  /// Copy with a different noise variance. Not defined for Sigmoid.
  Channel with_delta(double delta) const;

  ChannelKind kind() const noexcept { return kind_; }
  double delta() const noexcept { return delta_; }
  double epsilon() const noexcept { return epsilon_; }
  /// Door threshold K (0 for other kinds).
  double threshold() const noexcept { return threshold_; }
  /// Sigmoid slope (0 for other kinds).
  double slope() const noexcept { return slope_; }

  /// Labels live in a finite set (noiseless Sign/Door, and Sigmoid).
  bool is_discrete() const noexcept { return !labels_.empty(); }
  /// P_out(y | z) = P_out(y | -z): Abs and Door.
  bool is_even() const noexcept { return kind_ == ChannelKind::Abs || kind_ == ChannelKind::Door; }
  /// Delta = 0 with a continuous output (Linear, Abs, ReLU).
  bool is_noiseless_continuous() const noexcept { return delta_ == 0.0 && labels_.empty(); }

  const std::vector<double>& labels() const noexcept { return labels_; }
  /// Affine pieces of phi; empty for Sigmoid.
  const std::vector<Piece>& pieces() const noexcept { return pieces_; }
  /// Values of z where phi (or the label probability) changes regime.
  std::vector<double> kinks() const;

  /// E_A phi(z, A) and E_A phi(z, A)^2.
  double mean_output(double z) const;
  double second_output(double z) const;

  double draw(double z, std::mt19937_64& rng) const;
  std::string describe() const;

 private:
  Channel() = default;
  void build();

  ChannelKind kind_ = ChannelKind::Linear;
  double delta_ = 0.0;
  double epsilon_ = 0.0;
  double threshold_ = 0.0;
  double slope_ = 0.0;
  std::vector<Piece> pieces_;
  std::vector<double> labels_;
};

/// Posterior of the scalar channel given one output y.
struct ScalarPosterior {
  double log_z;     // log of the evidence (log-density or log-pmf of y)
  double mean_w;    // E[W | y]
  double second_w;  // E[W^2 | y]
  double mean_phi;  // E[phi(omega + sqrt(V) W, A) | y]
  double excess_w;  // E[W^2 | y] - 1, kept accurate when y barely moves the posterior
};

/// Output denoiser: gout is the posterior mean of the standardized w.
struct OutputDenoiser {
  double gout;
  double zout;
  double log_zout;
  double second_w;
  double var_deficit;  // 1 - Var[W | y]
};

double sample_label(const Channel& channel, double z, std::uint64_t seed);

/// Lebesgue density (Delta > 0) or pmf (discrete labels) of y given z.
/// Throws DomainError for noiseless continuous channels.
double density(const Channel& channel, double y, double z);

ScalarPosterior output_posterior(const Channel& channel, double y, double omega, double V);

/// Evidence int Dw P_out(y | omega + sqrt(V) w).
double zout(const Channel& channel, double y, double omega, double V);

/// Throws EvidenceUnderflowError when the evidence is zero.
OutputDenoiser gout(const Channel& channel, double y, double omega, double V);

/// Sum (or integral) over y of Z(y) F(posterior(y)) for the scalar channel at (omega, V).
double output_average(const Channel& channel, double omega, double V,
                      const std::function<double(const ScalarPosterior&)>& F);

/// E_V output_average(channel, sqrt(q) V, rho - q, F), V ~ N(0,1).
double scalar_channel_average(const Channel& channel, double q, double rho,
                              const std::function<double(const ScalarPosterior&)>& F);

/// Psi_Pout(q; rho) = E ln int Dw P_out(Y | sqrt(q) V + sqrt(rho - q) w).
/// At q = rho this is +infinity for noiseless continuous channels.
double psi_pout(const Channel& channel, double q, double rho);

/// Psi'_Pout(q; rho) = E[mean_w^2] / (2 (rho - q)). Requires q < rho.
double psi_pout_prime(const Channel& channel, double q, double rho);

/// I = int dy (int Dz (z^2 - 1) P_out(y | sqrt(rho) z))^2 / int Dz P_out(y | sqrt(rho) z).
/// Requires an even channel.
double stability_integral(const Channel& channel, double rho);

}  // namespace glmphase
