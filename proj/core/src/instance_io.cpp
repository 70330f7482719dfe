#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "glmphase/descriptors.hpp"
#include "glmphase/errors.hpp"
#include "glmphase/gamp.hpp"

namespace glmphase {

namespace {

constexpr const char* kMagic = "glmphase-instance";
constexpr int kVersion = 1;

std::string expect_key(std::istream& in, const std::string& key) {
  std::string line;
  while (std::getline(in, line) && line.empty()) {
  }
  if (!in) throw DomainError("read_instance: unexpected end of input before '" + key + "'");
  auto sp = line.find(' ');
  std::string got = line.substr(0, sp);
  if (got != key) throw DomainError("read_instance: expected '" + key + "', found '" + got + "'");
  return sp == std::string::npos ? std::string() : line.substr(sp + 1);
}

long long to_integer(const std::string& text, const std::string& key) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw DomainError("read_instance: malformed integer for '" + key + "'");
  return v;
}

void read_values(std::istream& in, double* out, long long count, const std::string& key) {
  for (long long k = 0; k < count; ++k)
    if (!(in >> out[k])) throw DomainError("read_instance: truncated block '" + key + "'");
}

}  // namespace

void write_instance(std::ostream& out, const Instance& inst, bool include_phi) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "n " << inst.n() << '\n';
  out << "m " << inst.m() << '\n';
  out << "seed " << inst.seed << '\n';
  out << "prior " << inst.prior.describe() << '\n';
  out << "channel " << inst.channel.describe() << '\n';
  out << "phi " << (include_phi ? 1 : 0) << '\n';
  out << "x_star\n";
  for (int i = 0; i < inst.n(); ++i) out << format_shortest(inst.x_star[i]) << '\n';
  out << "y\n";
  for (int mu = 0; mu < inst.m(); ++mu) out << format_shortest(inst.y[mu]) << '\n';
  if (include_phi) {
    out << "phi_rows\n";
    for (int mu = 0; mu < inst.m(); ++mu) {
      for (int i = 0; i < inst.n(); ++i) out << (i ? " " : "") << format_shortest(inst.phi(mu, i));
      out << '\n';
    }
  }
}

Instance read_instance(std::istream& in) {
  std::string header = expect_key(in, kMagic);
  if (to_integer(header, "version") != kVersion)
    throw DomainError("read_instance: unsupported version " + header);
  const long long n = to_integer(expect_key(in, "n"), "n");
  const long long m = to_integer(expect_key(in, "m"), "m");
  if (n < 1 || m < 1) throw DomainError("read_instance: n and m must be >= 1");
  const std::string seed_text = expect_key(in, "seed");
  std::uint64_t seed = 0;
  {
    auto [ptr, ec] = std::from_chars(seed_text.data(), seed_text.data() + seed_text.size(), seed);
    if (ec != std::errc() || ptr != seed_text.data() + seed_text.size())
      throw DomainError("read_instance: malformed seed");
  }
  Prior prior = parse_prior(expect_key(in, "prior"));
  Channel channel = parse_channel(expect_key(in, "channel"));
  const bool has_phi = to_integer(expect_key(in, "phi"), "phi") != 0;

  Instance inst{Eigen::MatrixXd(), Eigen::VectorXd(n), Eigen::VectorXd(m), prior, channel, seed};
  expect_key(in, "x_star");
  read_values(in, inst.x_star.data(), n, "x_star");
  expect_key(in, "y");
  read_values(in, inst.y.data(), m, "y");
  if (has_phi) {
    expect_key(in, "phi_rows");
    inst.phi.resize(m, n);
    for (long long mu = 0; mu < m; ++mu)
      for (long long i = 0; i < n; ++i)
        if (!(in >> inst.phi(mu, i))) throw DomainError("read_instance: truncated block 'phi_rows'");
  } else {
    inst.phi = generate_matrix(static_cast<int>(m), static_cast<int>(n), seed);
  }
  return inst;
}

}  // namespace glmphase
