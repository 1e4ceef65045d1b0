#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace sdelab {

// TOML-style configs: [section] headers, key = value lines, values are
// numbers, "strings", booleans, or [a, b, c] arrays of numbers. '#' starts a
// comment. Unknown keys are rejected by the experiment runner, not here.
struct ConfigValue {
  enum class Kind { number, string, boolean, array };
  Kind kind = Kind::number;
  double num = 0.0;
  std::string str;
  bool boolean = false;
  std::vector<double> array;
};

class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_text(const std::string& text);

  const std::string& text() const { return text_; }

  bool has(const std::string& section, const std::string& key) const;
  bool has_section(const std::string& section) const;

  double num(const std::string& section, const std::string& key) const;
  double num_or(const std::string& section, const std::string& key,
                double fallback) const;
  std::int64_t integer(const std::string& section, const std::string& key) const;
  std::int64_t integer_or(const std::string& section, const std::string& key,
                          std::int64_t fallback) const;
  std::string str(const std::string& section, const std::string& key) const;
  std::string str_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  bool boolean_or(const std::string& section, const std::string& key,
                  bool fallback) const;
  std::vector<double> array(const std::string& section,
                            const std::string& key) const;
  std::vector<double> array_or(const std::string& section,
                               const std::string& key,
                               const std::vector<double>& fallback) const;

  std::vector<std::string> keys(const std::string& section) const;

 private:
  const ConfigValue* find(const std::string& section,
                          const std::string& key) const;
  const ConfigValue& require(const std::string& section,
                             const std::string& key) const;

  std::string text_;
  std::map<std::string, std::map<std::string, ConfigValue>> sections_;
  std::map<std::string, std::vector<std::string>> key_order_;
};

}  // namespace sdelab
