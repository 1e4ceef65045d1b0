#pragma once

#include <string>
#include <vector>

namespace sdelab {

// Analytic coefficient functions are sums of terms from a small closed
// registry, so values and the first two derivatives are available without
// user-supplied code, and descriptors round-trip through config files.
//
//   poly(c0,c1,...)          c0 + c1 x + c2 x^2 + ...
//   sin(amp,freq,phase)      amp * sin(freq*x + phase)
//   abspow(coef,center,e)    coef * |x - center|^e
//   rough(amp,center,a,m)    amp * sum_{k<m} 2^{-k a} cos(2^k (x - center))
//
// abspow with e < 2 has no classical derivative at the center; deriv/deriv2
// return 0 there (the lab only ever differentiates diffusion coefficients,
// which use smooth terms). rough is the lacunary cosine series: a-Holder at
// every point down to scale 2^{-m}, used for drifts whose Holder modulus is
// active along the whole path.
struct FnTerm {
  enum class Kind { poly, sine, abspow, rough };
  Kind kind = Kind::poly;
  std::vector<double> params;
};

struct FnDescriptor {
  std::vector<FnTerm> terms;

  double value(double x) const;
  double deriv(double x) const;
  double deriv2(double x) const;
  bool is_zero() const;  // structurally zero (no terms or all-zero poly)

  std::string format() const;
  static FnDescriptor parse(const std::string& text);

  static FnDescriptor constant(double c);
  static FnDescriptor zero() { return FnDescriptor{}; }
};

}  // namespace sdelab
