#include "causalstab/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "causalstab/csv.hpp"

namespace cstab {

bool ConfigValue::operator==(const ConfigValue& other) const {
  if (type != other.type) return false;
  switch (type) {
    case Type::Integer:
      return integer == other.integer;
    case Type::Float:
      return real == other.real;
    case Type::Boolean:
      return boolean == other.boolean;
    case Type::String:
      return text == other.text;
    case Type::Array:
      return items == other.items;
  }
  return false;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

// Strips an unquoted trailing comment.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

ConfigValue parse_scalar(const std::string& raw, int line_no) {
  const std::string s = trim(raw);
  if (s.empty()) throw std::invalid_argument("config: empty value at line " + std::to_string(line_no));
  ConfigValue v;
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') {
      throw std::invalid_argument("config: unterminated string at line " + std::to_string(line_no));
    }
    v.type = ConfigValue::Type::String;
    v.text = s.substr(1, s.size() - 2);
    return v;
  }
  if (s == "true" || s == "false") {
    v.type = ConfigValue::Type::Boolean;
    v.boolean = s == "true";
    return v;
  }
  // Integer when the token parses fully without '.', 'e', or 'E'.
  const bool looks_integer = s.find_first_of(".eE") == std::string::npos;
  const char* begin = s.c_str();
  char* end = nullptr;
  if (looks_integer) {
    const long long parsed = std::strtoll(begin, &end, 10);
    if (end != begin && *end == '\0') {
      v.type = ConfigValue::Type::Integer;
      v.integer = parsed;
      return v;
    }
  }
  const double parsed = std::strtod(begin, &end);
  if (end != begin && *end == '\0') {
    v.type = ConfigValue::Type::Float;
    v.real = parsed;
    return v;
  }
  throw std::invalid_argument("config: cannot parse value '" + s + "' at line " +
                              std::to_string(line_no));
}

ConfigValue parse_value(const std::string& raw, int line_no) {
  const std::string s = trim(raw);
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') {
      throw std::invalid_argument("config: unterminated array at line " + std::to_string(line_no));
    }
    ConfigValue v;
    v.type = ConfigValue::Type::Array;
    const std::string inner = s.substr(1, s.size() - 2);
    std::string item;
    bool in_string = false;
    for (char c : inner) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        v.items.push_back(parse_scalar(item, line_no));
        item.clear();
      } else {
        item += c;
      }
    }
    if (!trim(item).empty()) v.items.push_back(parse_scalar(item, line_no));
    return v;
  }
  return parse_scalar(s, line_no);
}

std::string dump_value(const ConfigValue& v) {
  switch (v.type) {
    case ConfigValue::Type::Integer:
      return std::to_string(v.integer);
    case ConfigValue::Type::Float:
      return format_double(v.real);
    case ConfigValue::Type::Boolean:
      return v.boolean ? "true" : "false";
    case ConfigValue::Type::String:
      return '"' + v.text + '"';
    case ConfigValue::Type::Array: {
      std::string out = "[";
      for (std::size_t i = 0; i < v.items.size(); ++i) {
        if (i) out += ", ";
        out += dump_value(v.items[i]);
      }
      return out + "]";
    }
  }
  return {};
}

}  // namespace

Config Config::parse_string(const std::string& text) {
  Config config;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw std::invalid_argument("config: bad section header at line " +
                                    std::to_string(line_no));
      }
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) {
        throw std::invalid_argument("config: empty section name at line " +
                                    std::to_string(line_no));
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: expected key = value at line " +
                                  std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw std::invalid_argument("config: empty key at line " + std::to_string(line_no));
    }
    const std::string full_key = section.empty() ? key : section + "." + key;
    if (config.values_.count(full_key)) {
      throw std::invalid_argument("config: duplicate key '" + full_key + "'");
    }
    config.values_[full_key] = parse_value(line.substr(eq + 1), line_no);
  }
  return config;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str());
}

std::string Config::dump() const {
  // Group keys by section; sectionless keys come first.
  std::map<std::string, std::vector<std::pair<std::string, const ConfigValue*>>> sections;
  for (const auto& [key, value] : values_) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
      sections[""].emplace_back(key, &value);
    } else {
      sections[key.substr(0, dot)].emplace_back(key.substr(dot + 1), &value);
    }
  }
  std::string out;
  for (const auto& [section, entries] : sections) {
    if (!section.empty()) out += "[" + section + "]\n";
    for (const auto& [key, value] : entries) {
      out += key + " = " + dump_value(*value) + "\n";
    }
  }
  return out;
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  out.reserve(values_.size());
  for (const auto& [key, value] : values_) out.push_back(key);
  return out;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.type != ConfigValue::Type::Integer) {
    throw std::invalid_argument("config: key '" + key + "' is not an integer");
  }
  return it->second.integer;
}

double Config::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.type == ConfigValue::Type::Integer) {
    return static_cast<double>(it->second.integer);
  }
  if (it->second.type != ConfigValue::Type::Float) {
    throw std::invalid_argument("config: key '" + key + "' is not a number");
  }
  return it->second.real;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.type != ConfigValue::Type::Boolean) {
    throw std::invalid_argument("config: key '" + key + "' is not a boolean");
  }
  return it->second.boolean;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.type != ConfigValue::Type::String) {
    throw std::invalid_argument("config: key '" + key + "' is not a string");
  }
  return it->second.text;
}

std::vector<double> Config::get_double_array(const std::string& key,
                                             const std::vector<double>& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.type != ConfigValue::Type::Array) {
    throw std::invalid_argument("config: key '" + key + "' is not an array");
  }
  std::vector<double> out;
  for (const auto& item : it->second.items) {
    if (item.type == ConfigValue::Type::Integer) {
      out.push_back(static_cast<double>(item.integer));
    } else if (item.type == ConfigValue::Type::Float) {
      out.push_back(item.real);
    } else {
      throw std::invalid_argument("config: key '" + key + "' has non-numeric items");
    }
  }
  return out;
}

std::vector<std::string> Config::get_string_array(
    const std::string& key, const std::vector<std::string>& fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second.type != ConfigValue::Type::Array) {
    throw std::invalid_argument("config: key '" + key + "' is not an array");
  }
  std::vector<std::string> out;
  for (const auto& item : it->second.items) {
    if (item.type != ConfigValue::Type::String) {
      throw std::invalid_argument("config: key '" + key + "' has non-string items");
    }
    out.push_back(item.text);
  }
  return out;
}

void Config::require_known_keys(const std::vector<std::string>& allowed) const {
  for (const auto& [key, value] : values_) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
}

ConfigValue config_int(long long v) {
  ConfigValue out;
  out.type = ConfigValue::Type::Integer;
  out.integer = v;
  return out;
}

ConfigValue config_double(double v) {
  ConfigValue out;
  out.type = ConfigValue::Type::Float;
  out.real = v;
  return out;
}

ConfigValue config_bool(bool v) {
  ConfigValue out;
  out.type = ConfigValue::Type::Boolean;
  out.boolean = v;
  return out;
}

ConfigValue config_string(std::string v) {
  ConfigValue out;
  out.type = ConfigValue::Type::String;
  out.text = std::move(v);
  return out;
}

}  // namespace cstab
