#include "sdelab/density.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sdelab/numeric.hpp"
#include "sdelab/parallel.hpp"

namespace sdelab {

namespace {

struct UniformTable {
  double h = 0.0;
  std::vector<double> thetas;
  std::vector<double> re;
  std::vector<double> im;
  std::vector<double> se;
};

UniformTable resample_table(const CharFnTable& table, double cutoff,
                            int nodes) {
  if (table.thetas.empty() || table.thetas.front() > 1e-12)
    throw std::invalid_argument("levy_invert: table must include theta = 0");
  if (table.thetas.back() < cutoff * (1.0 - 1e-12))
    throw std::invalid_argument("levy_invert: table does not reach the cutoff");
  if (nodes < 16) throw std::invalid_argument("levy_invert: too few nodes");
  if (nodes % 2 == 0) ++nodes;  // odd count keeps the half-stride pass exact
  UniformTable u;
  u.h = cutoff / static_cast<double>(nodes - 1);
  u.thetas.resize(nodes);
  for (int i = 0; i < nodes; ++i) u.thetas[i] = u.h * i;
  u.re = resample_cubic(table.thetas, table.re, u.thetas);
  u.im = resample_cubic(table.thetas, table.im, u.thetas);
  u.se = resample_cubic(table.thetas, table.se, u.thetas);
  return u;
}

// Trapezoid over [-cutoff, cutoff] with conjugate-symmetric extension,
// evaluated with stride (1 = full resolution, 2 = half) for the Richardson
// error estimate. Returns the real part; *imag gets the imaginary part.
double invert_at(const UniformTable& u, double x, int stride, double* imag) {
  const std::size_t n = u.thetas.size();
  double re_acc = 0.0, im_acc = 0.0;
  for (std::size_t i = 0; i < n; i += stride) {
    const double th = u.thetas[i];
    const double c = std::cos(th * x);
    const double s = std::sin(th * x);
    // e^{-i th x} cf(th) + e^{+i th x} conj(cf(th)) for th > 0; single term
    // at th = 0.
    double re_term = c * u.re[i] + s * u.im[i];
    double im_term = c * u.im[i] - s * u.re[i];
    if (i > 0) {
      re_term *= 2.0;
      im_term = 0.0;  // the mirrored term cancels it exactly
    }
    // Folded symmetric trapezoid: theta = 0 is an interior node of the
    // [-cutoff, cutoff] grid, only the far endpoints carry weight 1/2.
    const double w = i + stride >= n ? 0.5 : 1.0;
    re_acc += w * re_term;
    im_acc += w * im_term;
  }
  const double h = u.h * stride;
  const double inv_2pi = 0.15915494309189533576888;
  if (imag) *imag = im_acc * h * inv_2pi;
  return re_acc * h * inv_2pi;
}

}  // namespace

DensityProfile levy_invert(const CharFnTable& table, std::span<const double> xs,
                           double theta_cutoff, const TailModel& tail,
                           int resample_nodes) {
  if (tail.kind == TailModel::Kind::power_law && !(tail.gamma > 0.0))
    throw std::invalid_argument("levy_invert: power-law tail needs gamma > 0");
  const UniformTable u = resample_table(table, theta_cutoff, resample_nodes);

  DensityProfile prof;
  prof.xs.assign(xs.begin(), xs.end());
  prof.values.resize(xs.size());
  prof.theta_cutoff = theta_cutoff;

  double quad_err = 0.0, imag_res = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    double imag = 0.0;
    const double full = invert_at(u, xs[j], 1, &imag);
    const double half = invert_at(u, xs[j], 2, nullptr);
    prof.values[j] = full;
    quad_err = std::max(quad_err, std::abs(full - half) / 3.0);
    imag_res = std::max(imag_res, std::abs(imag));
  }
  prof.imag_residue = imag_res;
  prof.budget.quadrature = quad_err;
  double se_int = 0.0;
  for (std::size_t i = 0; i < u.se.size(); ++i)
    se_int += std::abs(u.se[i]) * (i == 0 || i + 1 == u.se.size() ? 0.5 : 1.0);
  prof.budget.mc = se_int * u.h / 3.141592653589793238463;
  if (tail.kind == TailModel::Kind::power_law) {
    prof.budget.tail = tail.c / (3.141592653589793238463 * tail.gamma) *
                       std::pow(theta_cutoff, -tail.gamma);
    prof.budget.tail_modeled = true;
  }
  return prof;
}

DensityProfile local_density(double m0, const DensityProfile& normalized) {
  if (m0 < 0.0) throw std::invalid_argument("local_density: m0 < 0");
  DensityProfile out = normalized;
  for (auto& v : out.values) v *= m0;
  out.budget.quadrature *= m0;
  out.budget.tail *= m0;
  out.budget.mc *= m0;
  if (m0 == 0.0)
    for (auto& v : out.values) v = 0.0;
  return out;
}

HolderReport holder_modulus(const DensityProfile& profile,
                            const CharFnTable& table, double alpha,
                            const TailModel& tail, int resample_nodes) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("holder_modulus: alpha outside (0,1)");
  if (profile.xs.size() < 64)
    throw std::invalid_argument("holder_modulus: grid needs >= 64 points");

  HolderReport rep;
  rep.c_alpha_const = std::pow(2.0, 1.0 - alpha);

  for (std::size_t i = 0; i < profile.xs.size(); ++i) {
    for (std::size_t j = i + 1; j < profile.xs.size(); ++j) {
      const double q =
          std::abs(profile.values[i] - profile.values[j]) /
          std::pow(std::abs(profile.xs[i] - profile.xs[j]), alpha);
      rep.empirical_modulus = std::max(rep.empirical_modulus, q);
    }
  }

  const UniformTable u =
      resample_table(table, profile.theta_cutoff, resample_nodes);
  double integral = 0.0;
  for (std::size_t i = 0; i < u.thetas.size(); ++i) {
    const double mod = std::hypot(u.re[i], u.im[i]);
    const double term = std::pow(u.thetas[i], alpha) * mod;
    integral += term * (i == 0 || i + 1 == u.thetas.size() ? 0.5 : 1.0);
  }
  // Factor 2 for the symmetric negative-theta half.
  rep.integral_bound = rep.c_alpha_const / (2.0 * 3.141592653589793238463) *
                       2.0 * integral * u.h;

  if (tail.kind == TailModel::Kind::power_law) {
    rep.tail_exponent = alpha - tail.gamma;
    if (alpha >= tail.gamma) {
      rep.tail_divergent = true;
    } else {
      const double tail_int = tail.c *
                              std::pow(profile.theta_cutoff, alpha - tail.gamma) /
                              (tail.gamma - alpha);
      rep.integral_bound += rep.c_alpha_const /
                            (2.0 * 3.141592653589793238463) * 2.0 * tail_int;
    }
  }
  return rep;
}

DensityProfile kde_oracle(std::span<const double> samples, double bandwidth,
                          std::span<const double> xs) {
  if (!(bandwidth > 0.0)) throw std::invalid_argument("kde_oracle: bandwidth <= 0");
  if (samples.empty()) throw std::invalid_argument("kde_oracle: no samples");
  DensityProfile prof;
  prof.xs.assign(xs.begin(), xs.end());
  prof.values.assign(xs.size(), 0.0);

  const std::int64_t n = static_cast<std::int64_t>(samples.size());
  const std::size_t m = xs.size();
  const std::int64_t nb = block_count(n);
  std::vector<double> part(static_cast<std::size_t>(nb) * m, 0.0);
  for_blocks(n, [&](std::int64_t lo, std::int64_t hi) {
    const std::int64_t b = lo / kParallelBlock;
    double* acc = &part[static_cast<std::size_t>(b) * m];
    for (std::int64_t i = lo; i < hi; ++i) {
      const double xi = samples[i];
      for (std::size_t j = 0; j < m; ++j) {
        const double z = (xs[j] - xi) / bandwidth;
        if (std::abs(z) > 8.0) continue;
        acc[j] += std::exp(-0.5 * z * z);
      }
    }
  });
  const double norm = 1.0 / (static_cast<double>(n) * bandwidth *
                             2.5066282746310005024158);  // sqrt(2 pi)
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::int64_t b = 0; b < nb; ++b)
      s += part[static_cast<std::size_t>(b) * m + j];
    prof.values[j] = s * norm;
  }
  return prof;
}

}  // namespace sdelab
