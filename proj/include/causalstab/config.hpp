#pragma once

#include <map>
#include <string>
#include <vector>

namespace cstab {

// One parsed value from the config file: integer, float, boolean, quoted
// string, or a flat array of those.
struct ConfigValue {
  enum class Type { Integer, Float, Boolean, String, Array };

  Type type = Type::Integer;
  long long integer = 0;
  double real = 0.0;
  bool boolean = false;
  std::string text;
  std::vector<ConfigValue> items;

  bool operator==(const ConfigValue& other) const;
};

// TOML-style sectioned key/value file:
//   [section]
//   key = value          # comment
// Keys are addressed as "section.key" ("key" alone before any section).
class Config {
 public:
  static Config parse_string(const std::string& text);
  static Config parse_file(const std::string& path);

  std::string dump() const;

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::vector<std::string> keys() const;

  long long get_int(const std::string& key, long long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<double> get_double_array(const std::string& key,
                                       const std::vector<double>& fallback) const;
  std::vector<std::string> get_string_array(const std::string& key,
                                            const std::vector<std::string>& fallback) const;

  void set(const std::string& key, ConfigValue value) { values_[key] = std::move(value); }

  // Throws std::invalid_argument naming the first key not in `allowed`.
  void require_known_keys(const std::vector<std::string>& allowed) const;

  bool operator==(const Config& other) const { return values_ == other.values_; }

 private:
  std::map<std::string, ConfigValue> values_;
};

ConfigValue config_int(long long v);
ConfigValue config_double(double v);
ConfigValue config_bool(bool v);
ConfigValue config_string(std::string v);

}  // namespace cstab
