#pragma once

#include <stdexcept>
#include <string>

namespace sdelab {

// Thrown when a simulated state becomes non-finite. Carries path and step.
class NanDivergenceError : public std::runtime_error {
 public:
  NanDivergenceError(long long path, long long step)
      : std::runtime_error("non-finite state at path " + std::to_string(path) +
                           ", step " + std::to_string(step)),
        path_(path),
        step_(step) {}
  long long path() const { return path_; }
  long long step() const { return step_; }

 private:
  long long path_;
  long long step_;
};

// Thrown by coefficient validation. Carries the failing clause and point.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string clause, double point, std::string what_arg)
      : std::runtime_error(std::move(what_arg)),
        clause_(std::move(clause)),
        point_(point) {}
  const std::string& clause() const { return clause_; }
  double point() const { return point_; }

 private:
  std::string clause_;
  double point_;
};

// Thrown when the A/C event decomposition fails on more than the allowed
// fraction of localized paths.
class DecompositionViolation : public std::runtime_error {
 public:
  DecompositionViolation(long long violations, long long localized)
      : std::runtime_error("event decomposition failed on " +
                           std::to_string(violations) + " of " +
                           std::to_string(localized) + " localized paths"),
        violations_(violations),
        localized_(localized) {}
  long long violations() const { return violations_; }
  long long localized() const { return localized_; }

 private:
  long long violations_;
  long long localized_;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sdelab
