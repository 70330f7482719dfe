#include "glmphase/descriptors.hpp"

#include <cctype>
#include <charconv>
#include <map>
#include <set>

#include "glmphase/errors.hpp"

namespace glmphase {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

struct Parsed {
  std::string name;
  std::map<std::string, double> args;
};

double to_double(const std::string& text, const std::string& context) {
  std::string t = trim(text);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw DomainError(context + ": malformed number '" + t + "'");
  return v;
}

Parsed parse(const std::string& raw, const std::set<std::string>& allowed_keys) {
  std::string text = trim(raw);
  Parsed out;
  auto open = text.find('(');
  if (open == std::string::npos) {
    out.name = text;
    return out;
  }
  if (text.back() != ')') throw DomainError("descriptor '" + text + "': missing ')'");
  out.name = trim(text.substr(0, open));
  std::string body = text.substr(open + 1, text.size() - open - 2);
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto comma = body.find(',', pos);
    if (comma == std::string::npos) comma = body.size();
    std::string item = trim(body.substr(pos, comma - pos));
    pos = comma + 1;
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw DomainError("descriptor '" + text + "': expected key=value");
    std::string key = trim(item.substr(0, eq));
    if (!allowed_keys.count(key))
      throw DomainError("descriptor '" + text + "': unknown key '" + key + "'");
    out.args[key] = to_double(item.substr(eq + 1), "descriptor '" + text + "'");
  }
  return out;
}

double arg(const Parsed& p, const std::string& key, double fallback) {
  auto it = p.args.find(key);
  return it == p.args.end() ? fallback : it->second;
}

}  // namespace

Prior parse_prior(const std::string& text) {
  Parsed p = parse(text, {"variance", "p_plus", "sparsity", "a", "b", "prob_a"});
  if (p.name == "gaussian") return Prior::gaussian(arg(p, "variance", 1.0));
  if (p.name == "rademacher") return Prior::rademacher(arg(p, "p_plus", 0.5));
  if (p.name == "gauss_bernoulli") return Prior::gauss_bernoulli(arg(p, "sparsity", 1.0));
  if (p.name == "two_point")
    return Prior::two_point(arg(p, "a", 1.0), arg(p, "b", 0.0), arg(p, "prob_a", 0.5));
  throw DomainError("unknown prior '" + p.name + "'");
}

Channel parse_channel(const std::string& text) {
  Parsed p = parse(text, {"delta", "epsilon", "K", "slope"});
  double delta = arg(p, "delta", 0.0);
  Channel ch = [&] {
    if (p.name == "linear") return Channel::linear(delta);
    if (p.name == "sign") return Channel::sign(delta);
    if (p.name == "abs") return Channel::abs(delta);
    if (p.name == "relu") return Channel::relu(delta);
    if (p.name == "door") return Channel::door(arg(p, "K", 0.67449), delta);
    if (p.name == "sigmoid") return Channel::sigmoid(arg(p, "slope", 1.0));
    throw DomainError("unknown channel '" + p.name + "'");
  }();
  double eps = arg(p, "epsilon", 0.0);
  return eps > 0.0 ? ch.with_epsilon(eps) : ch;
}

}  // namespace glmphase
