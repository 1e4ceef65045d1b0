#include "sdelab/coeffs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "sdelab/errors.hpp"

namespace sdelab {

void CoefficientSpec::check_invariants() const {
  if (!(sigma0 > 0.0)) throw std::invalid_argument("spec: sigma0 must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("spec: alpha must lie in (0,1)");
  if (!(eps > 0.0)) throw std::invalid_argument("spec: eps must be > 0");
  if (!(holder_const >= 0.0))
    throw std::invalid_argument("spec: holder_const must be >= 0");
  if (!(T > 0.0) || !(t > 0.0) || !(t <= T))
    throw std::invalid_argument("spec: need 0 < t <= T");
}

ValidationReport validate_assumptions(const CoefficientSpec& spec, int grid_n) {
  spec.check_invariants();
  if (grid_n < 100)
    throw std::invalid_argument("validate_assumptions: grid_n must be >= 100");

  ValidationReport rep;
  rep.grid_n = grid_n;
  const double lo = spec.y0 - 6.0 * spec.eps;
  const double hi = spec.y0 + 6.0 * spec.eps;
  const double h = (hi - lo) / (grid_n - 1);

  std::vector<double> xs(grid_n), psi(grid_n);
  rep.inf_abs_sigma = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_n; ++i) {
    const double x = lo + i * h;
    const double s = spec.sigma.value(x);
    const double b = spec.b.value(x);
    if (!std::isfinite(s) || std::abs(s) > spec.sigma_bound) {
      rep.failed_clause = "H1-bound";
      rep.failure_point = x;
      return rep;
    }
    if (!std::isfinite(b) || std::abs(b) > spec.b_bound) {
      rep.failed_clause = "H1-bound";
      rep.failure_point = x;
      return rep;
    }
    xs[i] = x;
    psi[i] = b / s;
    rep.inf_abs_sigma = std::min(rep.inf_abs_sigma, std::abs(s));
    rep.sup_abs_sigma = std::max(rep.sup_abs_sigma, std::abs(s));
    rep.sup_abs_b = std::max(rep.sup_abs_b, std::abs(b));
    if (!(std::abs(s) > spec.sigma0)) {
      rep.failed_clause = "H1-ellipticity";
      rep.failure_point = x;
      return rep;
    }
  }

  double quot = 0.0;
  double quot_point = lo;
  for (int i = 0; i < grid_n; ++i) {
    for (int j = i + 1; j < grid_n; ++j) {
      const double q = std::abs(psi[i] - psi[j]) /
                       std::pow(static_cast<double>(j - i) * h, spec.alpha);
      if (q > quot) {
        quot = q;
        quot_point = xs[i];
      }
    }
  }
  rep.holder_quotient = quot;
  if (quot > spec.holder_const * 1.01) {
    rep.failed_clause = "H3-holder";
    rep.failure_point = quot_point;
    return rep;
  }
  rep.passed = true;
  return rep;
}

TruncationMap::TruncationMap(double y0, double eps)
    : y0_(y0),
      eps_(eps),
      blend_(BumpParams{4.0 * eps, 5.0 * eps, RampOrientation::rising}) {
  if (!(eps > 0.0)) throw std::invalid_argument("TruncationMap: eps <= 0");
}

double TruncationMap::value(double y) const {
  const double u = std::abs(y - y0_);
  if (u <= 4.0 * eps_) return y;
  const double s = y >= y0_ ? 1.0 : -1.0;
  if (u >= 5.0 * eps_) return y0_ + s * 5.0 * eps_;
  const double q = blend_.value(u);
  const double h = u * (1.0 - q) + 5.0 * eps_ * q;
  return y0_ + s * h;
}

double TruncationMap::deriv(double y) const {
  const double u = std::abs(y - y0_);
  if (u <= 4.0 * eps_) return 1.0;
  if (u >= 5.0 * eps_) return 0.0;
  const double q = blend_.value(u);
  const double dq = blend_.deriv(u);
  // h'(u) = (1 - q) + q'(u) (5 eps - u); lambda'(y) = h'(|y-y0|) (even).
  return (1.0 - q) + dq * (5.0 * eps_ - u);
}

double TruncationMap::deriv2(double y) const {
  const double u = std::abs(y - y0_);
  if (u <= 4.0 * eps_ || u >= 5.0 * eps_) return 0.0;
  const double dq = blend_.deriv(u);
  const double d2q = blend_.deriv2(u);
  const double h2 = -2.0 * dq + d2q * (5.0 * eps_ - u);
  return (y >= y0_ ? 1.0 : -1.0) * h2;
}

TruncatedCoeffs::TruncatedCoeffs(CoefficientSpec spec, int sup_samples)
    : spec_(std::move(spec)), clamp_(spec_.y0, spec_.eps) {
  spec_.check_invariants();
  if (sup_samples < 1000)
    throw std::invalid_argument("TruncatedCoeffs: sup_samples too small");

  // The clamp maps all of R onto the closed 5 eps-ball, so the sup norms of
  // the composed coefficients equal sups of the raw ones over that ball.
  const double lo = spec_.y0 - 5.0 * spec_.eps;
  const double hi = spec_.y0 + 5.0 * spec_.eps;
  const double h = (hi - lo) / (sup_samples - 1);

  auto refine = [&](auto&& f, double x_at_max, double coarse_max) {
    // 3-point parabolic refinement around the discrete argmax.
    const double xl = std::max(lo, x_at_max - h);
    const double xr = std::min(hi, x_at_max + h);
    const double fl = std::abs(f(xl));
    const double fc = std::abs(f(x_at_max));
    const double fr = std::abs(f(xr));
    const double denom = fl - 2.0 * fc + fr;
    double best = std::max({fl, fc, fr, coarse_max});
    if (denom < 0.0) {
      const double shift = 0.5 * (fl - fr) / denom * (xr - xl) / 2.0;
      const double xs = std::clamp(x_at_max + shift, xl, xr);
      best = std::max(best, std::abs(f(xs)));
    }
    return best;
  };

  auto scan = [&](auto&& f) {
    double best = 0.0;
    double arg = lo;
    for (int i = 0; i < sup_samples; ++i) {
      const double x = lo + i * h;
      const double v = std::abs(f(x));
      if (v > best) {
        best = v;
        arg = x;
      }
    }
    return refine(f, arg, best);
  };

  auto sigma_fn = [this](double x) { return spec_.sigma.value(x); };
  auto b_fn = [this](double x) { return spec_.b.value(x); };
  auto psi_fn = [this](double x) {
    return spec_.b.value(x) / spec_.sigma.value(x);
  };
  sup_sigma_bar_ = scan(sigma_fn);
  sup_b_bar_ = scan(b_fn);
  sup_psi_ = scan(psi_fn);
}

double TruncatedCoeffs::sigma_bar(double y) const {
  return spec_.sigma.value(clamp_.value(y));
}

double TruncatedCoeffs::b_bar(double y) const {
  return spec_.b.value(clamp_.value(y));
}

double TruncatedCoeffs::psi(double y) const {
  const double z = clamp_.value(y);
  return spec_.b.value(z) / spec_.sigma.value(z);
}

double TruncatedCoeffs::sigma_bar_deriv(double y) const {
  return spec_.sigma.deriv(clamp_.value(y)) * clamp_.deriv(y);
}

double TruncatedCoeffs::sigma_bar_deriv2(double y) const {
  const double z = clamp_.value(y);
  const double dl = clamp_.deriv(y);
  return spec_.sigma.deriv2(z) * dl * dl +
         spec_.sigma.deriv(z) * clamp_.deriv2(y);
}

TruncatedCoeffs build_truncated(const CoefficientSpec& spec,
                                int validation_grid_n) {
  const ValidationReport rep = validate_assumptions(spec, validation_grid_n);
  if (!rep.passed)
    throw ValidationError(rep.failed_clause, rep.failure_point,
                          "coefficient validation failed: " + rep.failed_clause +
                              " at x = " + std::to_string(rep.failure_point));
  return TruncatedCoeffs(spec);
}

}  // namespace sdelab
