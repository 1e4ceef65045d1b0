#pragma once

#include <string>
#include <vector>

#include "sdelab/coeffs.hpp"

namespace sdelab {

// Closed-form terminal law when one exists, for oracle comparisons.
struct Oracle {
  enum class Kind { none, brownian, ornstein_uhlenbeck };
  Kind kind = Kind::none;

  bool has_closed_form() const { return kind != Kind::none; }
  double mean(const CoefficientSpec& spec) const;
  double variance(const CoefficientSpec& spec) const;
  double density(const CoefficientSpec& spec, double x) const;
  double cf_modulus(const CoefficientSpec& spec, double theta) const;
};

struct Scenario {
  std::string name;
  CoefficientSpec spec;
  Oracle oracle;
};

// Serialize a scenario as the key-value lines of a [scenario] config section;
// parse is its inverse. The echo is also what gets digested into manifests.
std::string format_scenario(const Scenario& s);

class ScenarioRegistry {
 public:
  // gaussian, ou, const-drift, holder05, holder-var, rough05, rough075.
  static ScenarioRegistry defaults();

  void add(Scenario s);  // throws ConfigError on a duplicate name
  const Scenario& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  std::vector<Scenario> scenarios_;
};

}  // namespace sdelab
