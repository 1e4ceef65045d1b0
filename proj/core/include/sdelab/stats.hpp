#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace sdelab {

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;
  std::int64_t n = 0;
};

// Mean and standard error. Summation is sequential in index order so the
// result does not depend on the worker count.
MeanSE mean_se(std::span<const double> xs);

// Mean/SE of f(i) over i in [0, n), evaluated in parallel blocks and reduced
// in block order (deterministic).
MeanSE mean_se_fn(std::int64_t n, const std::function<double(std::int64_t)>& f);

double sample_variance(std::span<const double> xs);

// Ordinary least squares y = intercept + slope x.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double intercept_se = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};
LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys);

// y = c0 + c1 x + c2 x^2; exposes the curvature coefficient and its SE.
struct QuadFit {
  double c0 = 0.0, c1 = 0.0, c2 = 0.0;
  double c2_se = 0.0;
};
QuadFit quadratic_fit(std::span<const double> xs, std::span<const double> ys);

// Percentile via linear interpolation of the sorted sample, p in [0, 1].
double percentile(std::vector<double> xs, double p);

// Nonparametric bootstrap CI for the mean of xs (percentile method, B
// resamples, deterministic counter-based resampling keyed by seed).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};
Interval bootstrap_mean_ci(std::span<const double> xs, int resamples,
                           double level, std::uint64_t seed);

}  // namespace sdelab
