#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sdelab {

// Composite Gauss-Legendre quadrature of f over [a, b] with n_cells cells of
// 8 nodes each. For smooth integrands the error is far below 1e-12 relative.
double gauss_legendre(const std::function<double(double)>& f, double a,
                      double b, int n_cells);

// Cubic Hermite interpolant on a strictly increasing node set with caller
// supplied values and derivatives. Clamps to the end values outside the range.
double hermite_eval(std::span<const double> xs, std::span<const double> ys,
                    std::span<const double> dys, double x);

// Interpolation with centered finite-difference slopes. Deliberately has no
// monotonicity limiter so the interpolant is a linear function of the data
// (sums of tables resample to sums of resampled tables exactly).
std::vector<double> resample_cubic(std::span<const double> xs,
                                   std::span<const double> ys,
                                   std::span<const double> xnew);

// Trapezoid rule over uniformly spaced samples with spacing h.
double trapezoid_uniform(std::span<const double> ys, double h);

// FNV-1a, used for config digests in file headers and manifests.
std::uint64_t fnv1a(std::span<const char> bytes);
std::uint64_t fnv1a(const std::string& s);

}  // namespace sdelab
