#pragma once

// Flat experiment configuration read from an INI file. Keys are addressed as
// "section.key"; --override applies on top of the file.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace glmphase::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Config {
 public:
  static Config load(const std::string& path);
  static Config from_string(const std::string& ini_text);

  /// "section.key=value"; the key must be one the runner understands.
  void apply_override(const std::string& assignment);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string text(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  double real(const std::string& key) const;
  double real(const std::string& key, double fallback) const;
  std::optional<double> optional_real(const std::string& key) const;
  int integer(const std::string& key, int fallback) const;
  std::uint64_t seed(const std::string& key) const;
  bool flag(const std::string& key, bool fallback) const;

  /// Sorted "key = value" lines; the hash input.
  std::string canonical() const;
  std::uint32_t hash() const;

 private:
  void set(const std::string& key, const std::string& value);
  std::map<std::string, std::string> values_;
};

}  // namespace glmphase::cli
