#include "sdelab/mollifier.hpp"

#include <cmath>
#include <stdexcept>

#include "sdelab/numeric.hpp"

namespace sdelab {

namespace {

void check_knots(const BumpParams& p) {
  if (!(p.a < p.r))
    throw std::invalid_argument("bump: inner knot must satisfy a < r");
}

}  // namespace

double bump_f(const BumpParams& p, double x) {
  check_knots(p);
  if (x <= p.a || x >= p.r) return 0.0;
  const double e = 1.0 / (x - p.r) - 1.0 / (x - p.a);
  if (e < -700.0) return 0.0;
  return std::exp(e);
}

double bump_f_deriv(const BumpParams& p, double x) {
  check_knots(p);
  if (x <= p.a || x >= p.r) return 0.0;
  const double u = x - p.r;
  const double v = x - p.a;
  const double e = 1.0 / u - 1.0 / v;
  if (e < -700.0) return 0.0;
  return std::exp(e) * (-1.0 / (u * u) + 1.0 / (v * v));
}

SmoothRamp::SmoothRamp(BumpParams p, int n_cells) : params_(p) {
  check_knots(p);
  if (n_cells < 8) throw std::invalid_argument("SmoothRamp: n_cells < 8");
  const double h = (p.r - p.a) / n_cells;
  auto f = [&](double x) { return bump_f(p, x); };

  nodes_.resize(n_cells + 1);
  cum_.resize(n_cells + 1);
  for (int i = 0; i <= n_cells; ++i) nodes_[i] = p.a + i * h;
  cum_[0] = 0.0;
  for (int i = 0; i < n_cells; ++i)
    cum_[i + 1] = cum_[i] + gauss_legendre(f, nodes_[i], nodes_[i + 1], 2);
  norm_ = cum_.back();
  for (auto& c : cum_) c /= norm_;
  cum_.back() = 1.0;

  dcum_.resize(n_cells + 1);
  for (int i = 0; i <= n_cells; ++i) dcum_[i] = bump_f(p, nodes_[i]) / norm_;
}

double SmoothRamp::rising_value(double x) const {
  if (x <= params_.a) return 0.0;
  if (x >= params_.r) return 1.0;
  const double v = hermite_eval(nodes_, cum_, dcum_, x);
  return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
}

double SmoothRamp::value(double x) const {
  const double v = rising_value(x);
  return params_.orientation == RampOrientation::rising ? v : 1.0 - v;
}

double SmoothRamp::deriv(double x) const {
  const double d = bump_f(params_, x) / norm_;
  return params_.orientation == RampOrientation::rising ? d : -d;
}

double SmoothRamp::deriv2(double x) const {
  const double d = bump_f_deriv(params_, x) / norm_;
  return params_.orientation == RampOrientation::rising ? d : -d;
}

Mollifier::Mollifier(double eps, double a)
    : eps_(eps),
      a_(a),
      up_(BumpParams{-2.0 * eps, -a, RampOrientation::rising}),
      down_(BumpParams{a, 2.0 * eps, RampOrientation::rising}) {
  if (!(eps > 0.0) || !(a > eps) || !(a < 2.0 * eps))
    throw std::invalid_argument("Mollifier: need 0 < eps < a < 2*eps");
}

double Mollifier::value(double x) const {
  // Product form g_up * (1 - g_down); both factors live on disjoint ramps, so
  // on [-a, a] the value is exactly 1.
  if (x <= -2.0 * eps_ || x >= 2.0 * eps_) return 0.0;
  if (x >= -a_ && x <= a_) return 1.0;
  return up_.value(x) * (1.0 - down_.value(x));
}

double Mollifier::deriv(double x, int order) const {
  if (order != 1 && order != 2)
    throw std::invalid_argument("Mollifier::deriv: unsupported order");
  if (x <= -2.0 * eps_ || x >= 2.0 * eps_) return 0.0;
  if (x >= -a_ && x <= a_) return 0.0;
  const double gu = up_.value(x);
  const double gd = down_.value(x);
  const double du = up_.deriv(x);
  const double dd = down_.deriv(x);
  if (order == 1) return du * (1.0 - gd) - gu * dd;
  const double d2u = up_.deriv2(x);
  const double d2d = down_.deriv2(x);
  return d2u * (1.0 - gd) - 2.0 * du * dd - gu * d2d;
}

}  // namespace sdelab
