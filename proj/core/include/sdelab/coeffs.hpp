#pragma once

#include <limits>
#include <memory>
#include <string>

#include "sdelab/functions.hpp"
#include "sdelab/mollifier.hpp"

namespace sdelab {

// The SDE coefficients together with the locality window on which the
// regularity assumptions are checked: ellipticity floor sigma0 and
// boundedness on the 6-eps ball around y0, and alpha-Holder continuity of
// psi = b/sigma there with constant holder_const.
struct CoefficientSpec {
  FnDescriptor sigma;
  FnDescriptor b;
  double x0 = 0.0;
  double y0 = 0.0;
  double eps = 1.0;
  double sigma0 = 0.5;
  double alpha = 0.5;
  double holder_const = 1.0;
  double T = 1.0;
  double t = 1.0;
  // Declared bounds for |sigma| and |b| on the 6-eps ball; infinity means
  // only finiteness is required.
  double sigma_bound = std::numeric_limits<double>::infinity();
  double b_bound = std::numeric_limits<double>::infinity();

  void check_invariants() const;  // throws std::invalid_argument
};

struct ValidationReport {
  bool passed = false;
  std::string failed_clause;  // "H1-ellipticity", "H1-bound", "H3-holder", ""
  double failure_point = 0.0;
  double inf_abs_sigma = 0.0;
  double sup_abs_sigma = 0.0;
  double sup_abs_b = 0.0;
  double holder_quotient = 0.0;  // empirical max over grid pairs
  int grid_n = 0;
};

// Samples the 6-eps ball at grid_n points. Passes iff inf|sigma| > sigma0,
// the declared bounds hold, and the empirical Holder quotient of psi is at
// most holder_const * 1.01.
ValidationReport validate_assumptions(const CoefficientSpec& spec, int grid_n);

// The smooth clamp lambda: identity on |y - y0| <= 4 eps, radial clamp to
// distance 5 eps for |y - y0| >= 5 eps, and on the annulus the smooth blend
// h(u) = u (1 - q(u)) + 5 eps q(u) with q the normalized bump integral on
// [4 eps, 5 eps]. Odd about y0, monotone, C-infinity, range in the closed
// 5 eps-ball.
class TruncationMap {
 public:
  TruncationMap(double y0, double eps);

  double value(double y) const;
  double deriv(double y) const;
  double deriv2(double y) const;

  double y0() const { return y0_; }
  double eps() const { return eps_; }

 private:
  double y0_;
  double eps_;
  SmoothRamp blend_;  // q on [4 eps, 5 eps]
};

// sigma and b composed with the clamp, plus psi = b_bar / sigma_bar and the
// supremum norms over the clamp's range (dense sampling of the closed
// 5 eps-ball with local parabolic refinement).
class TruncatedCoeffs {
 public:
  TruncatedCoeffs(CoefficientSpec spec, int sup_samples = 100000);

  double sigma_bar(double y) const;
  double b_bar(double y) const;
  double psi(double y) const;  // b_bar / sigma_bar
  double sigma_bar_deriv(double y) const;
  double sigma_bar_deriv2(double y) const;

  double sup_sigma_bar() const { return sup_sigma_bar_; }
  double sup_b_bar() const { return sup_b_bar_; }
  double sup_psi() const { return sup_psi_; }

  const CoefficientSpec& spec() const { return spec_; }
  const TruncationMap& clamp() const { return clamp_; }

 private:
  CoefficientSpec spec_;
  TruncationMap clamp_;
  double sup_sigma_bar_ = 0.0;
  double sup_b_bar_ = 0.0;
  double sup_psi_ = 0.0;
};

// Validates (default grid) and builds the truncated coefficients; throws
// ValidationError if a clause fails.
TruncatedCoeffs build_truncated(const CoefficientSpec& spec,
                                int validation_grid_n = 400);

}  // namespace sdelab
