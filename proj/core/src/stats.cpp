#include "sdelab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "sdelab/parallel.hpp"
#include "sdelab/rng.hpp"

namespace sdelab {

MeanSE mean_se(std::span<const double> xs) {
  MeanSE out;
  out.n = static_cast<std::int64_t>(xs.size());
  if (out.n == 0) return out;
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / static_cast<double>(out.n);
  if (out.n < 2) return out;
  double ss = 0.0;
  for (double x : xs) {
    const double d = x - out.mean;
    ss += d * d;
  }
  const double var = ss / static_cast<double>(out.n - 1);
  out.se = std::sqrt(var / static_cast<double>(out.n));
  return out;
}

MeanSE mean_se_fn(std::int64_t n,
                  const std::function<double(std::int64_t)>& f) {
  MeanSE out;
  out.n = n;
  if (n == 0) return out;
  const std::int64_t nb = block_count(n);
  std::vector<double> bsum(nb, 0.0), bsq(nb, 0.0);
  for_blocks(n, [&](std::int64_t lo, std::int64_t hi) {
    const std::int64_t b = lo / kParallelBlock;
    double s = 0.0, q = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) {
      const double x = f(i);
      s += x;
      q += x * x;
    }
    bsum[b] = s;
    bsq[b] = q;
  });
  double sum = 0.0, sq = 0.0;
  for (std::int64_t b = 0; b < nb; ++b) {
    sum += bsum[b];
    sq += bsq[b];
  }
  out.mean = sum / static_cast<double>(n);
  if (n < 2) return out;
  const double var =
      std::max(0.0, (sq - sum * out.mean) / static_cast<double>(n - 1));
  out.se = std::sqrt(var / static_cast<double>(n));
  return out;
}

double sample_variance(std::span<const double> xs) {
  const MeanSE m = mean_se(xs);
  if (m.n < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    ss += d * d;
  }
  return ss / static_cast<double>(m.n - 1);
}

LinearFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("linear_fit: need >= 2 matching points");
  const std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  LinearFit fit;
  fit.n = n;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ssr += r * r;
  }
  fit.r2 = syy > 0.0 ? 1.0 - ssr / syy : 1.0;
  if (n > 2) {
    const double sigma2 = ssr / static_cast<double>(n - 2);
    fit.slope_se = std::sqrt(sigma2 / sxx);
    fit.intercept_se =
        std::sqrt(sigma2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
  }
  return fit;
}

QuadFit quadratic_fit(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 4)
    throw std::invalid_argument("quadratic_fit: need >= 4 matching points");
  const std::size_t n = xs.size();
  // Normal equations for the 3x3 system; centered x for conditioning.
  double mx = 0.0;
  for (double x : xs) mx += x;
  mx /= static_cast<double>(n);
  double s[5] = {static_cast<double>(n), 0, 0, 0, 0};
  double t[3] = {0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    const double x = xs[i] - mx;
    double p = x;
    s[1] += p;
    p *= x;
    s[2] += p;
    p *= x;
    s[3] += p;
    p *= x;
    s[4] += p;
    t[0] += ys[i];
    t[1] += ys[i] * x;
    t[2] += ys[i] * x * x;
  }
  double a[3][4] = {{s[0], s[1], s[2], t[0]},
                    {s[1], s[2], s[3], t[1]},
                    {s[2], s[3], s[4], t[2]}};
  for (int c = 0; c < 3; ++c) {
    int piv = c;
    for (int r = c + 1; r < 3; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    for (int r = 0; r < 3; ++r) {
      if (r == c) continue;
      const double m = a[r][c] / a[c][c];
      for (int k = c; k < 4; ++k) a[r][k] -= m * a[c][k];
    }
  }
  const double b0 = a[0][3] / a[0][0];
  const double b1 = a[1][3] / a[1][1];
  const double b2 = a[2][3] / a[2][2];
  QuadFit fit;
  // Un-center: y = b0 + b1 (x-mx) + b2 (x-mx)^2.
  fit.c2 = b2;
  fit.c1 = b1 - 2.0 * b2 * mx;
  fit.c0 = b0 - b1 * mx + b2 * mx * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = xs[i] - mx;
    const double r = ys[i] - (b0 + b1 * x + b2 * x * x);
    ssr += r * r;
  }
  if (n > 3) {
    const double sigma2 = ssr / static_cast<double>(n - 3);
    // Var(c2) from the inverse normal matrix diagonal; recompute the (2,2)
    // cofactor of the centered moment matrix.
    const double det = s[0] * (s[2] * s[4] - s[3] * s[3]) -
                       s[1] * (s[1] * s[4] - s[3] * s[2]) +
                       s[2] * (s[1] * s[3] - s[2] * s[2]);
    const double cof22 = s[0] * s[2] - s[1] * s[1];
    if (det != 0.0) fit.c2_se = std::sqrt(std::max(0.0, sigma2 * cof22 / det));
  }
  return fit;
}

double percentile(std::vector<double> xs, double p) {
  if (xs.empty()) throw std::invalid_argument("percentile: empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = p * static_cast<double>(xs.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  if (lo + 1 >= xs.size()) return xs.back();
  const double frac = pos - static_cast<double>(lo);
  return xs[lo] * (1.0 - frac) + xs[lo + 1] * frac;
}

Interval bootstrap_mean_ci(std::span<const double> xs, int resamples,
                           double level, std::uint64_t seed) {
  if (xs.empty() || resamples < 2)
    throw std::invalid_argument("bootstrap_mean_ci: bad arguments");
  const std::size_t n = xs.size();
  std::vector<double> means(resamples);
  for (int b = 0; b < resamples; ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = uniform_draw(seed, static_cast<std::uint64_t>(b),
                                    static_cast<std::uint64_t>(i));
      const std::size_t j =
          std::min(n - 1, static_cast<std::size_t>(u * static_cast<double>(n)));
      sum += xs[j];
    }
    means[b] = sum / static_cast<double>(n);
  }
  const double alpha = (1.0 - level) / 2.0;
  Interval ci;
  ci.lo = percentile(means, alpha);
  ci.hi = percentile(std::move(means), 1.0 - alpha);
  return ci;
}

}  // namespace sdelab
