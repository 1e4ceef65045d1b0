#pragma once

#include <vector>

namespace sdelab {

enum class RampOrientation { rising, falling };

// Knots of the bump kernel f and the ramp g built from it. The kernel is
// supported on (a, r); the rising ramp is 0 for x <= a and 1 for x >= r.
struct BumpParams {
  double a = 0.0;
  double r = 1.0;
  RampOrientation orientation = RampOrientation::rising;
};

// exp(1/(x - r) - 1/(x - a)) on (a, r), zero elsewhere. Exponents below -700
// underflow to exactly 0 (the true value is below 1e-300 there).
double bump_f(const BumpParams& p, double x);

// d/dx of bump_f, analytic.
double bump_f_deriv(const BumpParams& p, double x);

// Smooth monotone ramp: the normalized running integral of bump_f. The
// normalized integral is precomputed at construction on a uniform table over
// [a, r] (composite Gauss-Legendre per cell) and evaluated by cubic Hermite
// interpolation with the exact derivative f/Z at the nodes, so a value lookup
// in a path loop costs O(1).
class SmoothRamp {
 public:
  explicit SmoothRamp(BumpParams p, int n_cells = 1024);

  double value(double x) const;
  double deriv(double x) const;   // f(x)/Z, orientation-signed
  double deriv2(double x) const;  // f'(x)/Z, orientation-signed

  const BumpParams& params() const { return params_; }
  double normalization() const { return norm_; }

 private:
  double rising_value(double x) const;

  BumpParams params_;
  double norm_ = 0.0;
  std::vector<double> nodes_;
  std::vector<double> cum_;     // normalized integral at nodes
  std::vector<double> dcum_;    // f/Z at nodes
};

// The plateau bump: product of a rising ramp on [-2e, -a] and a falling ramp
// on [a, 2e], for e < a < 2e. Identically 1 on [-a, a] (hence on the closed
// e-ball) and 0 outside (-2e, 2e). Immutable after construction; concurrent
// reads are safe.
class Mollifier {
 public:
  Mollifier(double eps, double a);

  // Centered default knot a = 3e/2: equal plateau margin on both sides.
  static Mollifier with_default_knot(double eps) {
    return Mollifier(eps, 1.5 * eps);
  }

  double value(double x) const;
  double deriv(double x, int order) const;  // order 1 or 2

  double eps() const { return eps_; }
  double knot() const { return a_; }

 private:
  double eps_;
  double a_;
  SmoothRamp up_;    // g_{-2e,-a}
  SmoothRamp down_;  // g_{a,2e}
};

}  // namespace sdelab
