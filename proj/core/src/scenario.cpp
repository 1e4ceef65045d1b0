#include "sdelab/scenario.hpp"

#include <cmath>
#include <stdexcept>

#include "sdelab/csvio.hpp"
#include "sdelab/errors.hpp"

namespace sdelab {

double Oracle::mean(const CoefficientSpec& spec) const {
  switch (kind) {
    case Kind::none:
      break;
    case Kind::brownian:
      return spec.x0;
    case Kind::ornstein_uhlenbeck:
      return spec.x0 * std::exp(-spec.t);
  }
  throw std::logic_error("Oracle: no closed form");
}

double Oracle::variance(const CoefficientSpec& spec) const {
  switch (kind) {
    case Kind::none:
      break;
    case Kind::brownian:
      return spec.t;
    case Kind::ornstein_uhlenbeck:
      return 0.5 * (1.0 - std::exp(-2.0 * spec.t));
  }
  throw std::logic_error("Oracle: no closed form");
}

double Oracle::density(const CoefficientSpec& spec, double x) const {
  const double m = mean(spec);
  const double v = variance(spec);
  const double z = (x - m) / std::sqrt(v);
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.141592653589793238463 * v);
}

double Oracle::cf_modulus(const CoefficientSpec& spec, double theta) const {
  return std::exp(-0.5 * variance(spec) * theta * theta);
}

namespace {

const char* oracle_name(Oracle::Kind k) {
  switch (k) {
    case Oracle::Kind::none:
      return "none";
    case Oracle::Kind::brownian:
      return "brownian";
    case Oracle::Kind::ornstein_uhlenbeck:
      return "ou";
  }
  return "none";
}

}  // namespace

std::string format_scenario(const Scenario& s) {
  std::string out;
  auto kv = [&](const std::string& k, const std::string& v) {
    out += k + " = " + v + "\n";
  };
  kv("name", "\"" + s.name + "\"");
  kv("sigma", "\"" + s.spec.sigma.format() + "\"");
  kv("b", "\"" + s.spec.b.format() + "\"");
  kv("x0", format_double(s.spec.x0));
  kv("y0", format_double(s.spec.y0));
  kv("eps", format_double(s.spec.eps));
  kv("sigma0", format_double(s.spec.sigma0));
  kv("alpha", format_double(s.spec.alpha));
  kv("holder_const", format_double(s.spec.holder_const));
  kv("T", format_double(s.spec.T));
  kv("t", format_double(s.spec.t));
  kv("oracle", std::string("\"") + oracle_name(s.oracle.kind) + "\"");
  return out;
}

void ScenarioRegistry::add(Scenario s) {
  if (contains(s.name))
    throw ConfigError("duplicate scenario name: " + s.name);
  scenarios_.push_back(std::move(s));
}

const Scenario& ScenarioRegistry::get(const std::string& name) const {
  for (const auto& s : scenarios_)
    if (s.name == name) return s;
  throw ConfigError("scenario not found: " + name);
}

bool ScenarioRegistry::contains(const std::string& name) const {
  for (const auto& s : scenarios_)
    if (s.name == name) return true;
  return false;
}

std::vector<std::string> ScenarioRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(scenarios_.size());
  for (const auto& s : scenarios_) out.push_back(s.name);
  return out;
}

ScenarioRegistry ScenarioRegistry::defaults() {
  ScenarioRegistry reg;

  {
    Scenario s;
    s.name = "gaussian";
    s.spec.sigma = FnDescriptor::constant(1.0);
    s.spec.b = FnDescriptor::zero();
    s.spec.x0 = 0.0;
    s.spec.y0 = 0.0;
    s.spec.eps = 6.0;
    s.spec.sigma0 = 0.5;
    s.spec.alpha = 0.5;
    s.spec.holder_const = 1.0;
    s.spec.T = 1.0;
    s.spec.t = 1.0;
    s.oracle.kind = Oracle::Kind::brownian;
    reg.add(std::move(s));
  }
  {
    Scenario s;
    s.name = "ou";
    s.spec.sigma = FnDescriptor::constant(1.0);
    s.spec.b = FnDescriptor::parse("poly(0,-1)");
    s.spec.x0 = 0.0;
    s.spec.y0 = 0.0;
    s.spec.eps = 4.0;
    s.spec.sigma0 = 0.5;
    s.spec.alpha = 0.5;
    // psi = -x is Lipschitz; its 1/2-Holder quotient over the 24-ball is
    // at most (48)^{1/2}.
    s.spec.holder_const = 7.0;
    s.spec.T = 1.0;
    s.spec.t = 1.0;
    s.oracle.kind = Oracle::Kind::ornstein_uhlenbeck;
    reg.add(std::move(s));
  }
  {
    Scenario s;
    s.name = "const-drift";
    s.spec.sigma = FnDescriptor::constant(1.0);
    s.spec.b = FnDescriptor::constant(0.8);
    s.spec.x0 = 0.0;
    s.spec.y0 = 0.0;
    s.spec.eps = 1.0;
    s.spec.sigma0 = 0.5;
    s.spec.alpha = 0.5;
    s.spec.holder_const = 1.0;
    s.spec.T = 1.0;
    s.spec.t = 1.0;
    s.oracle.kind = Oracle::Kind::none;
    reg.add(std::move(s));
  }
  {
    Scenario s;
    s.name = "holder05";
    s.spec.sigma = FnDescriptor::constant(1.0);
    s.spec.b = FnDescriptor::parse("abspow(1,0,0.5)");
    s.spec.x0 = 0.0;
    s.spec.y0 = 0.0;
    s.spec.eps = 0.5;
    s.spec.sigma0 = 0.5;
    s.spec.alpha = 0.5;
    s.spec.holder_const = 1.0;
    s.spec.T = 1.0;
    s.spec.t = 1.0;
    s.oracle.kind = Oracle::Kind::none;
    reg.add(std::move(s));
  }
  {
    Scenario s;
    s.name = "holder-var";
    s.spec.sigma = FnDescriptor::parse("poly(2) + sin(1,1,0)");
    s.spec.b = FnDescriptor::parse("abspow(1,0,0.5)");
    s.spec.x0 = 0.0;
    s.spec.y0 = 0.0;
    s.spec.eps = 0.5;
    s.spec.sigma0 = 0.9;
    s.spec.alpha = 0.5;
    s.spec.holder_const = 5.5;
    s.spec.T = 1.0;
    s.spec.t = 1.0;
    s.oracle.kind = Oracle::Kind::none;
    reg.add(std::move(s));
  }
  {
    // Lacunary-cosine drift: the 1/2-Holder modulus is active at every point
    // of the path, which is what the approximation-rate experiment probes.
    Scenario s;
    s.name = "rough05";
    s.spec.sigma = FnDescriptor::constant(1.0);
    s.spec.b = FnDescriptor::parse("rough(0.4,0,0.5,12)");
    s.spec.x0 = 0.0;
    s.spec.y0 = 0.0;
    s.spec.eps = 1.0;
    s.spec.sigma0 = 0.5;
    s.spec.alpha = 0.5;
    s.spec.holder_const = 4.5;
    s.spec.T = 1.0;
    s.spec.t = 1.0;
    s.oracle.kind = Oracle::Kind::none;
    reg.add(std::move(s));
  }
  {
    Scenario s;
    s.name = "rough075";
    s.spec.sigma = FnDescriptor::constant(1.0);
    s.spec.b = FnDescriptor::parse("rough(0.4,0,0.75,12)");
    s.spec.x0 = 0.0;
    s.spec.y0 = 0.0;
    s.spec.eps = 1.0;
    s.spec.sigma0 = 0.5;
    s.spec.alpha = 0.75;
    s.spec.holder_const = 3.5;
    s.spec.T = 1.0;
    s.spec.t = 1.0;
    s.oracle.kind = Oracle::Kind::none;
    reg.add(std::move(s));
  }
  return reg;
}

}  // namespace sdelab
