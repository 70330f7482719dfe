#include "config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include <boost/crc.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace glmphase::cli {

namespace {

constexpr std::array kKnownKeys = {
    "run.seed",
    "model.prior",         "model.channel",
    "grid.alpha_min",      "grid.alpha_max",      "grid.alpha_step",
    "grid.param_min",      "grid.param_max",      "grid.param_step",     "grid.q_points",
    "numerics.se_tol",     "numerics.se_max_iter", "numerics.se_damping",
    "numerics.bracket_lo", "numerics.bracket_hi", "numerics.bracket_tol",
    "gamp.n",              "gamp.alpha",          "gamp.instances",      "gamp.n_test",
    "gamp.max_iter",       "gamp.tol",            "gamp.damping",        "gamp.channel_epsilon",
    "gamp.lambda_rule",
    "validate.quick",
};

bool known(const std::string& key) {
  return std::find(kKnownKeys.begin(), kKnownKeys.end(), key) != kKnownKeys.end();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

void Config::set(const std::string& key, const std::string& value) {
  if (!known(key)) throw ConfigError("unknown configuration key '" + key + "'");
  values_[key] = trim(value);
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return from_string(buf.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

Config Config::from_string(const std::string& ini_text) {
  boost::property_tree::ptree tree;
  std::istringstream in(ini_text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("line " + std::to_string(e.line()) + ": " + e.message());
  }
  Config cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' must live inside a [section]");
    for (const auto& [key, value] : body) cfg.set(section + "." + key, value.data());
  }
  return cfg;
}

void Config::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::string Config::text(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing required key '" + key + "'");
  return it->second;
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  return has(key) ? text(key) : fallback;
}

double Config::real(const std::string& key) const {
  const std::string s = text(key);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "': '" + s + "' is not a number");
  return v;
}

double Config::real(const std::string& key, double fallback) const {
  return has(key) ? real(key) : fallback;
}

std::optional<double> Config::optional_real(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return real(key);
}

int Config::integer(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const std::string s = text(key);
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "': '" + s + "' is not an integer");
  return v;
}

std::uint64_t Config::seed(const std::string& key) const {
  const std::string s = text(key);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("key '" + key + "': '" + s + "' is not an unsigned integer");
  return v;
}

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string s = text(key);
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("key '" + key + "': '" + s + "' is not a boolean");
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::uint32_t Config::hash() const {
  boost::crc_32_type crc;
  const std::string c = canonical();
  crc.process_bytes(c.data(), c.size());
  return crc.checksum();
}

}  // namespace glmphase::cli
