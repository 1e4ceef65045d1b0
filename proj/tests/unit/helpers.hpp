#pragma once

#include <string>

#include "sdelab/coeffs.hpp"

namespace sdelab::testing {

inline CoefficientSpec make_spec(const std::string& sigma, const std::string& b,
                                 double eps = 1.0, double y0 = 0.0,
                                 double x0 = 0.0, double alpha = 0.5,
                                 double holder_const = 1.0,
                                 double sigma0 = 0.5, double t = 1.0) {
  CoefficientSpec spec;
  spec.sigma = FnDescriptor::parse(sigma);
  spec.b = FnDescriptor::parse(b);
  spec.eps = eps;
  spec.y0 = y0;
  spec.x0 = x0;
  spec.alpha = alpha;
  spec.holder_const = holder_const;
  spec.sigma0 = sigma0;
  spec.T = 1.0;
  spec.t = t;
  if (t > spec.T) spec.T = t;
  return spec;
}

}  // namespace sdelab::testing
