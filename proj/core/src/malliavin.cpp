#include "sdelab/malliavin.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "sdelab/mollifier.hpp"
#include "sdelab/parallel.hpp"

namespace sdelab {

namespace {

bool sigma_is_constant(const CoefficientSpec& spec) {
  for (const auto& t : spec.sigma.terms) {
    if (t.kind != FnTerm::Kind::poly) return false;
    for (std::size_t i = 1; i < t.params.size(); ++i)
      if (t.params[i] != 0.0) return false;
  }
  return true;
}

// Per-path workspace for the directional-derivative recursions.
struct PathCalc {
  const WindowEnsemble& we;
  const TruncatedCoeffs& tc;
  std::int64_t p;
  std::int64_t steps;
  double dt;

  double x(std::int64_t k) const { return we.x_at(p, k); }
  double w(std::int64_t k) const { return we.dw_at(p, k); }

  // Suffix products S_k = prod_{j >= k} (1 + sigma_bar'(x_j) w_j), S_K = 1.
  void suffix_products(std::vector<double>& s) const {
    s.resize(steps + 1);
    s[steps] = 1.0;
    for (std::int64_t k = steps - 1; k >= 0; --k)
      s[k] = s[k + 1] * (1.0 + tc.sigma_bar_deriv(x(k)) * w(k));
  }

  // d_k = D_k Xbar_t = sigma_bar(x_k) S_{k+1}.
  void terminal_derivative(const std::vector<double>& s,
                           std::vector<double>& d) const {
    d.resize(steps);
    for (std::int64_t k = 0; k < steps; ++k)
      d[k] = tc.sigma_bar(x(k)) * s[k + 1];
  }

  // First and second directional derivatives of Xbar_t along a frozen
  // increment-space direction c (c_k = 1 gives the all-ones direction used by
  // the sums over derivative slots).
  void directional(const std::function<double(std::int64_t)>& c, double& first,
                   double& second) const {
    double u = 0.0, v = 0.0;
    for (std::int64_t k = 0; k < steps; ++k) {
      const double xk = x(k);
      const double wk = w(k);
      const double ck = c(k);
      const double s1 = tc.sigma_bar_deriv(xk);
      const double s2 = tc.sigma_bar_deriv2(xk);
      const double u_next = u + s1 * u * wk + tc.sigma_bar(xk) * ck;
      v = v + s2 * u * u * wk + s1 * v * wk + 2.0 * s1 * u * ck;
      u = u_next;
    }
    first = u;
    second = v;
  }

  // sum_k d^2 Xbar_t / dw_k^2 via the backward flow second derivative.
  double diag_second() const {
    double acc = 0.0;
    double flow1 = 1.0;  // dXbar_t / dx_{k}, built backward
    double flow2 = 0.0;  // d^2 Xbar_t / dx_{k}^2
    for (std::int64_t k = steps - 1; k >= 0; --k) {
      const double xk = x(k);
      const double wk = w(k);
      const double a = 1.0 + tc.sigma_bar_deriv(xk) * wk;
      const double sb = tc.sigma_bar(xk);
      // flow currently references node k+1; acc needs flow at k+1.
      acc += sb * sb * flow2;
      flow2 = flow2 * a * a + flow1 * tc.sigma_bar_deriv2(xk) * wk;
      flow1 *= a;
    }
    return acc;
  }
};

}  // namespace

DerivativeTable first_variation(const WindowEnsemble& we,
                                const TruncatedCoeffs& tc, FKind f_kind) {
  if (!we.driftless)
    throw std::invalid_argument("first_variation: window must be driftless");
  DerivativeTable table;
  table.grid = we.window;
  table.f_kind = f_kind;
  table.n_paths = we.n_paths;
  const std::int64_t steps = we.window.n_steps;
  const double dt = we.window.dt();
  table.dsf.resize(we.n_paths * steps);
  table.m.resize(we.n_paths);
  table.f.resize(we.n_paths);

  for_blocks(we.n_paths, [&](std::int64_t lo, std::int64_t hi) {
    std::vector<double> s, d;
    for (std::int64_t p = lo; p < hi; ++p) {
      double* row = &table.dsf[p * steps];
      if (f_kind == FKind::w_increment) {
        double fw = 0.0;
        for (std::int64_t k = 0; k < steps; ++k) {
          row[k] = 1.0;
          fw += we.dw_at(p, k);
        }
        table.f[p] = fw;
        table.m[p] = dt * static_cast<double>(steps);
      } else {
        PathCalc calc{we, tc, p, steps, dt};
        calc.suffix_products(s);
        calc.terminal_derivative(s, d);
        double m = 0.0;
        for (std::int64_t k = 0; k < steps; ++k) {
          row[k] = d[k];
          m += d[k] * d[k];
        }
        table.f[p] = we.terminal(p);
        table.m[p] = m * dt;
      }
    }
  });
  return table;
}

std::vector<double> malliavin_covariance(const DerivativeTable& table) {
  const std::int64_t steps = table.grid.n_steps;
  const double dt = table.grid.dt();
  std::vector<double> m(table.n_paths);
  for (std::int64_t p = 0; p < table.n_paths; ++p) {
    double acc = 0.0;
    for (std::int64_t k = 0; k < steps; ++k) {
      const double d = table.dsf[p * steps + k];
      acc += d * d;
    }
    m[p] = acc * dt;
    if (!(m[p] > 0.0))
      throw std::runtime_error(
          "malliavin_covariance: degenerate covariance at path " +
          std::to_string(p));
  }
  return m;
}

double skorokhod_adapted(std::span<const double> u,
                         std::span<const double> dw) {
  if (u.size() != dw.size())
    throw std::invalid_argument("skorokhod_adapted: size mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) acc += u[k] * dw[k];
  return acc;
}

namespace {

struct GEval {
  double g = 0.0;        // G
  double de_g = 0.0;     // sum_k dG/dw_k
  double de2_g = 0.0;    // sum_{jk} d2G/dw_j dw_k
};

// Directional data of the G factor along the all-ones direction; exact for
// the discrete functionals in the registry.
GEval eval_g(const WindowEnsemble& we, const TruncatedCoeffs& tc,
             const Mollifier* phi, GKind g_kind, std::int64_t p,
             std::int64_t steps, double fw, double p1, double p2) {
  GEval out;
  const double y0 = tc.spec().y0;
  switch (g_kind) {
    case GKind::one:
      out.g = 1.0;
      return out;
    case GKind::phi: {
      const double u = we.terminal(p) - y0;
      out.g = phi->value(u);
      const double d1 = phi->deriv(u, 1);
      const double d2 = phi->deriv(u, 2);
      out.de_g = d1 * p1;
      out.de2_g = d2 * p1 * p1 + d1 * p2;
      return out;
    }
    case GKind::phi_w: {
      const double u = we.terminal(p) - y0;
      const double ph = phi->value(u);
      const double d1 = phi->deriv(u, 1);
      const double d2 = phi->deriv(u, 2);
      const double k = static_cast<double>(steps);
      out.g = ph * fw;
      out.de_g = d1 * p1 * fw + ph * k;
      out.de2_g = (d2 * p1 * p1 + d1 * p2) * fw + 2.0 * k * d1 * p1;
      return out;
    }
  }
  return out;
}

}  // namespace

std::vector<double> ibp_weight(const WindowEnsemble& we,
                               const TruncatedCoeffs& tc, FKind f_kind,
                               GKind g_kind, int order, double mollifier_knot) {
  if (!we.driftless)
    throw std::invalid_argument("ibp_weight: window must be driftless");
  if (order != 1 && order != 2)
    throw std::invalid_argument("ibp_weight: order must be 1 or 2");
  const bool const_sigma = sigma_is_constant(tc.spec());
  if (f_kind == FKind::xbar_terminal && !const_sigma &&
      (g_kind != GKind::one || order != 1))
    throw std::invalid_argument(
        "ibp_weight: unsupported (F, G, order) combination for non-constant "
        "sigma");

  const std::int64_t steps = we.window.n_steps;
  const double dt = we.window.dt();
  const double delta = dt * static_cast<double>(steps);
  const CoefficientSpec& spec = tc.spec();
  const double knot = mollifier_knot > 0.0 ? mollifier_knot : 1.5 * spec.eps;
  std::unique_ptr<Mollifier> phi;
  if (g_kind != GKind::one) phi = std::make_unique<Mollifier>(spec.eps, knot);

  std::vector<double> h(we.n_paths);

  if (f_kind == FKind::w_increment ||
      (f_kind == FKind::xbar_terminal && const_sigma)) {
    // Linear functionals of the increments: F = sum dW (scale 1) or
    // F = x + sigma sum dW (scale sigma). The finite-dimensional Gaussian
    // integration by parts gives
    //   H1 = (G F_w - dt DeG) / (scale delta),
    //   H2 = (H1 F_w - dt DeH1) / (scale delta),
    //   DeH1 = (DeG F_w + G K - dt De2G) / (scale delta).
    const double scale =
        f_kind == FKind::w_increment ? 1.0 : tc.sigma_bar(spec.y0);
    for_blocks(we.n_paths, [&](std::int64_t lo, std::int64_t hi) {
      for (std::int64_t p = lo; p < hi; ++p) {
        double fw = 0.0;
        for (std::int64_t k = 0; k < steps; ++k) fw += we.dw_at(p, k);
        double p1 = 0.0, p2 = 0.0;
        if (g_kind != GKind::one) {
          PathCalc calc{we, tc, p, steps, dt};
          calc.directional([](std::int64_t) { return 1.0; }, p1, p2);
        }
        const GEval g = eval_g(we, tc, phi.get(), g_kind, p, steps, fw, p1, p2);
        const double h1 = (g.g * fw - dt * g.de_g) / (scale * delta);
        if (order == 1) {
          h[p] = h1;
        } else {
          const double de_h1 =
              (g.de_g * fw + g.g * static_cast<double>(steps) - dt * g.de2_g) /
              (scale * delta);
          h[p] = (h1 * fw - dt * de_h1) / (scale * delta);
        }
      }
    });
    return h;
  }

  // General smooth sigma_bar, F = Xbar_t, G = 1, order 1:
  //   H1 = delta(M^{-1} DF)
  //      = (1/M) sum_k dW_k D_k F - (dt/M) sum_k D^2_{kk} F + (2 dt^2/M^2) Q,
  // with Q the Hessian of F applied to (DF, DF).
  for_blocks(we.n_paths, [&](std::int64_t lo, std::int64_t hi) {
    std::vector<double> s, d;
    for (std::int64_t p = lo; p < hi; ++p) {
      PathCalc calc{we, tc, p, steps, dt};
      calc.suffix_products(s);
      calc.terminal_derivative(s, d);
      double m = 0.0, ito = 0.0;
      for (std::int64_t k = 0; k < steps; ++k) {
        m += d[k] * d[k];
        ito += d[k] * we.dw_at(p, k);
      }
      const double cov = m * dt;
      const double diag2 = calc.diag_second();
      double dir1 = 0.0, q = 0.0;
      calc.directional([&](std::int64_t k) { return d[k]; }, dir1, q);
      h[p] = ito / cov - dt * diag2 / cov + 2.0 * dt * dt * q / (cov * cov);
    }
  });
  return h;
}

TestFunction test_fn_sine(double freq) {
  TestFunction t;
  t.name = "sin(" + std::to_string(freq) + "x)";
  t.f = [freq](double x) { return std::sin(freq * x); };
  t.d1 = [freq](double x) { return freq * std::cos(freq * x); };
  t.d2 = [freq](double x) { return -freq * freq * std::sin(freq * x); };
  return t;
}

TestFunction test_fn_quadratic() {
  TestFunction t;
  t.name = "x^2";
  t.f = [](double x) { return x * x; };
  t.d1 = [](double x) { return 2.0 * x; };
  t.d2 = [](double) { return 2.0; };
  return t;
}

TestFunction test_fn_bump(double eps, double knot) {
  auto phi = std::make_shared<Mollifier>(eps, knot);
  TestFunction t;
  t.name = "bump";
  t.f = [phi](double x) { return phi->value(x); };
  t.d1 = [phi](double x) { return phi->deriv(x, 1); };
  t.d2 = [phi](double x) { return phi->deriv(x, 2); };
  return t;
}

IbpReport verify_ibp(const WindowEnsemble& we, const TruncatedCoeffs& tc,
                     FKind f_kind, GKind g_kind, int order,
                     const TestFunction& phi, double mollifier_knot) {
  IbpReport rep;
  rep.order = order;
  rep.delta = we.window.dt() * static_cast<double>(we.window.n_steps);

  const std::vector<double> hn =
      ibp_weight(we, tc, f_kind, g_kind, order, mollifier_knot);
  std::vector<double> h1;
  if (order == 2) h1 = ibp_weight(we, tc, f_kind, g_kind, 1, mollifier_knot);

  const CoefficientSpec& spec = tc.spec();
  const double knot = mollifier_knot > 0.0 ? mollifier_knot : 1.5 * spec.eps;
  std::unique_ptr<Mollifier> gphi;
  if (g_kind != GKind::one) gphi = std::make_unique<Mollifier>(spec.eps, knot);

  const std::int64_t steps = we.window.n_steps;
  std::vector<double> lhs(we.n_paths), rhs(we.n_paths);
  for_blocks(we.n_paths, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t p = lo; p < hi; ++p) {
      double fval = 0.0;
      if (f_kind == FKind::w_increment) {
        for (std::int64_t k = 0; k < steps; ++k) fval += we.dw_at(p, k);
      } else {
        fval = we.terminal(p);
      }
      double g = 1.0;
      if (g_kind != GKind::one) {
        g = gphi->value(we.terminal(p) - spec.y0);
        if (g_kind == GKind::phi_w) {
          double fw = 0.0;
          for (std::int64_t k = 0; k < steps; ++k) fw += we.dw_at(p, k);
          g *= fw;
        }
      }
      lhs[p] = (order == 1 ? phi.d1(fval) : phi.d2(fval)) * g;
      rhs[p] = phi.f(fval) * hn[p];
    }
  });

  rep.lhs = mean_se(lhs);
  rep.rhs = mean_se(rhs);
  std::vector<double> diff(we.n_paths);
  for (std::int64_t p = 0; p < we.n_paths; ++p) diff[p] = lhs[p] - rhs[p];
  rep.diff = mean_se(diff);

  double hn_sq = 0.0;
  for (double v : hn) hn_sq += v * v;
  rep.hn_l2_norm = std::sqrt(hn_sq / static_cast<double>(we.n_paths));
  if (order == 1) {
    rep.h1_l2_norm = rep.hn_l2_norm;
  } else {
    double h1_sq = 0.0;
    for (double v : h1) h1_sq += v * v;
    rep.h1_l2_norm = std::sqrt(h1_sq / static_cast<double>(we.n_paths));
  }
  rep.pass = std::abs(rep.diff.mean) <= 4.0 * rep.diff.se;
  return rep;
}

NormScalingReport weight_norm_scaling(const CoefficientSpec& spec,
                                      const TruncatedCoeffs& tc, FKind f_kind,
                                      GKind g_kind, int n2,
                                      std::span<const double> deltas,
                                      std::int64_t n_paths, std::uint64_t seed,
                                      std::int64_t window_steps, double t,
                                      double start_y) {
  if (deltas.size() < 4)
    throw std::invalid_argument("weight_norm_scaling: need >= 4 deltas");
  const double span_decades =
      std::log10(deltas.front() > deltas.back()
                     ? deltas.front() / deltas.back()
                     : deltas.back() / deltas.front());
  if (span_decades < 1.5)
    throw std::invalid_argument(
        "weight_norm_scaling: delta ladder must span >= 1.5 decades");

  NormScalingReport rep;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    WindowConfig cfg;
    cfg.t = t;
    cfg.delta = deltas[i];
    cfg.window_steps = window_steps;
    cfg.n_paths = n_paths;
    cfg.seed = seed + i;
    cfg.driftless = true;
    cfg.fixed_start = start_y;
    const WindowEnsemble we = simulate_window(spec, tc, cfg);
    const std::vector<double> h = ibp_weight(we, tc, f_kind, g_kind, n2);
    double sq = 0.0;
    for (double v : h) sq += v * v;
    rep.deltas.push_back(deltas[i]);
    rep.norms.push_back(std::sqrt(sq / static_cast<double>(n_paths)));
  }
  std::vector<double> lx(rep.deltas.size()), ly(rep.deltas.size());
  for (std::size_t i = 0; i < rep.deltas.size(); ++i) {
    lx[i] = std::log(rep.deltas[i]);
    ly[i] = std::log(rep.norms[i]);
  }
  const LinearFit fit = linear_fit(lx, ly);
  rep.slope = fit.slope;
  rep.slope_se = fit.slope_se;
  return rep;
}

}  // namespace sdelab
