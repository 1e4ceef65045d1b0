#include "sdelab/labcfg.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sdelab/errors.hpp"

namespace sdelab {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// Strips a '#' comment that is not inside a quoted string.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

ConfigValue parse_value(const std::string& raw, int line_no) {
  const std::string v = trim(raw);
  if (v.empty()) throw ConfigError("config line " + std::to_string(line_no) +
                                   ": empty value");
  ConfigValue out;
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": unterminated string");
    out.kind = ConfigValue::Kind::string;
    out.str = v.substr(1, v.size() - 2);
    return out;
  }
  if (v == "true" || v == "false") {
    out.kind = ConfigValue::Kind::boolean;
    out.boolean = v == "true";
    return out;
  }
  if (v.front() == '[') {
    if (v.back() != ']')
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": unterminated array");
    out.kind = ConfigValue::Kind::array;
    std::string body = v.substr(1, v.size() - 2);
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string it = trim(item);
      if (it.empty()) continue;
      std::size_t used = 0;
      const double d = std::stod(it, &used);
      if (used != it.size())
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": bad array element '" + it + "'");
      out.array.push_back(d);
    }
    return out;
  }
  std::size_t used = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &used);
  } catch (const std::exception&) {
    throw ConfigError("config line " + std::to_string(line_no) +
                      ": cannot parse value '" + v + "'");
  }
  if (used != v.size())
    throw ConfigError("config line " + std::to_string(line_no) +
                      ": trailing characters in '" + v + "'");
  out.kind = ConfigValue::Kind::number;
  out.num = d;
  return out;
}

}  // namespace

Config Config::parse_text(const std::string& text) {
  Config cfg;
  cfg.text_ = text;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']')
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": unterminated section header");
      section = trim(body.substr(1, body.size() - 2));
      if (section.empty())
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": empty section name");
      cfg.sections_[section];
      continue;
    }
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key");
    if (section.empty())
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": key outside any [section]");
    if (cfg.sections_[section].count(key))
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": duplicate key '" + key + "'");
    cfg.sections_[section][key] = parse_value(body.substr(eq + 1), line_no);
    cfg.key_order_[section].push_back(key);
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

bool Config::has_section(const std::string& section) const {
  return sections_.count(section) != 0;
}

const ConfigValue* Config::find(const std::string& section,
                                const std::string& key) const {
  const auto sit = sections_.find(section);
  if (sit == sections_.end()) return nullptr;
  const auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return nullptr;
  return &kit->second;
}

const ConfigValue& Config::require(const std::string& section,
                                   const std::string& key) const {
  const ConfigValue* v = find(section, key);
  if (!v)
    throw ConfigError("missing config key [" + section + "] " + key);
  return *v;
}

double Config::num(const std::string& section, const std::string& key) const {
  const ConfigValue& v = require(section, key);
  if (v.kind != ConfigValue::Kind::number)
    throw ConfigError("config key [" + section + "] " + key +
                      " must be a number");
  return v.num;
}

double Config::num_or(const std::string& section, const std::string& key,
                      double fallback) const {
  return has(section, key) ? num(section, key) : fallback;
}

std::int64_t Config::integer(const std::string& section,
                             const std::string& key) const {
  const double d = num(section, key);
  const std::int64_t i = static_cast<std::int64_t>(std::llround(d));
  if (std::abs(d - static_cast<double>(i)) > 1e-9)
    throw ConfigError("config key [" + section + "] " + key +
                      " must be an integer");
  return i;
}

std::int64_t Config::integer_or(const std::string& section,
                                const std::string& key,
                                std::int64_t fallback) const {
  return has(section, key) ? integer(section, key) : fallback;
}

std::string Config::str(const std::string& section,
                        const std::string& key) const {
  const ConfigValue& v = require(section, key);
  if (v.kind != ConfigValue::Kind::string)
    throw ConfigError("config key [" + section + "] " + key +
                      " must be a string");
  return v.str;
}

std::string Config::str_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  return has(section, key) ? str(section, key) : fallback;
}

bool Config::boolean_or(const std::string& section, const std::string& key,
                        bool fallback) const {
  if (!has(section, key)) return fallback;
  const ConfigValue& v = require(section, key);
  if (v.kind != ConfigValue::Kind::boolean)
    throw ConfigError("config key [" + section + "] " + key +
                      " must be true/false");
  return v.boolean;
}

std::vector<double> Config::array(const std::string& section,
                                  const std::string& key) const {
  const ConfigValue& v = require(section, key);
  if (v.kind != ConfigValue::Kind::array)
    throw ConfigError("config key [" + section + "] " + key +
                      " must be an array");
  return v.array;
}

std::vector<double> Config::array_or(const std::string& section,
                                     const std::string& key,
                                     const std::vector<double>& fallback) const {
  return has(section, key) ? array(section, key) : fallback;
}

std::vector<std::string> Config::keys(const std::string& section) const {
  const auto it = key_order_.find(section);
  if (it == key_order_.end()) return {};
  return it->second;
}

}  // namespace sdelab
