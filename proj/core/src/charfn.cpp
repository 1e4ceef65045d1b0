#include "sdelab/charfn.hpp"

#include <algorithm>
#include <cmath>

#include "sdelab/mollifier.hpp"
#include "sdelab/parallel.hpp"
#include "sdelab/rng.hpp"

namespace sdelab {

CharFnTable localized_charfn(std::span<const double> samples,
                             std::span<const double> thetas, double y0,
                             double eps, double knot, double t,
                             std::span<const double> weights) {
  if (samples.empty() || thetas.empty())
    throw std::invalid_argument("localized_charfn: empty input");
  if (!weights.empty() && weights.size() != samples.size())
    throw std::invalid_argument("localized_charfn: weight size mismatch");
  const double use_knot = knot > 0.0 ? knot : 1.5 * eps;
  const Mollifier phi(eps, use_knot);

  CharFnTable table;
  table.thetas.assign(thetas.begin(), thetas.end());
  std::sort(table.thetas.begin(), table.thetas.end());
  table.n_paths = static_cast<std::int64_t>(samples.size());
  table.y0 = y0;
  table.eps = eps;
  table.knot = use_knot;
  table.t = t;

  const std::size_t nt = table.thetas.size();
  const std::int64_t n = table.n_paths;
  const std::int64_t nb = block_count(n);

  // Per-block partial sums: re, im, re^2, im^2 for each theta. Mollifier
  // values vanish outside the window, so zero-phi samples only contribute to
  // the sample count.
  std::vector<double> part(static_cast<std::size_t>(nb) * nt * 4, 0.0);
  for_blocks(n, [&](std::int64_t lo, std::int64_t hi) {
    const std::int64_t b = lo / kParallelBlock;
    double* acc = &part[static_cast<std::size_t>(b) * nt * 4];
    for (std::int64_t i = lo; i < hi; ++i) {
      const double x = samples[i];
      double w = phi.value(x - y0);
      if (w == 0.0) continue;
      if (!weights.empty()) w *= weights[i];
      for (std::size_t k = 0; k < nt; ++k) {
        const double th = table.thetas[k];
        const double c = std::cos(th * x) * w;
        const double s = std::sin(th * x) * w;
        acc[4 * k + 0] += c;
        acc[4 * k + 1] += s;
        acc[4 * k + 2] += c * c;
        acc[4 * k + 3] += s * s;
      }
    }
  });

  table.re.resize(nt);
  table.im.resize(nt);
  table.se.resize(nt);
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < nt; ++k) {
    double sr = 0.0, si = 0.0, qr = 0.0, qi = 0.0;
    for (std::int64_t b = 0; b < nb; ++b) {
      const double* acc = &part[static_cast<std::size_t>(b) * nt * 4];
      sr += acc[4 * k + 0];
      si += acc[4 * k + 1];
      qr += acc[4 * k + 2];
      qi += acc[4 * k + 3];
    }
    table.re[k] = sr / dn;
    table.im[k] = si / dn;
    const double var_r = std::max(0.0, (qr - sr * table.re[k]) / (dn - 1.0));
    const double var_i = std::max(0.0, (qi - si * table.im[k]) / (dn - 1.0));
    table.se[k] = std::sqrt(std::max(var_r, var_i) / dn);
  }
  return table;
}

DecayFit fit_decay(const CharFnTable& table, std::uint64_t bootstrap_seed,
                   int bootstrap_resamples) {
  DecayFit fit;
  fit.noise_floor = table.noise_floor();

  std::vector<double> lx, ly;
  double max_usable = 0.0;
  for (std::size_t k = 0; k < table.thetas.size(); ++k) {
    const double th = table.thetas[k];
    if (th < 1.0) continue;
    const double mod = table.modulus(k);
    if (mod < 3.0 * table.se[k]) continue;
    if (mod < 3.0 * fit.noise_floor) continue;
    max_usable = std::max(max_usable, th);
    lx.push_back(std::log(th));
    ly.push_back(std::log(mod));
  }
  if (lx.size() < 6) throw InsufficientSignal(fit.noise_floor, max_usable);

  const LinearFit lin = linear_fit(lx, ly);
  fit.gamma_hat = -lin.slope - 1.0;
  fit.c_hat = std::exp(lin.intercept);
  fit.theta_lo = std::exp(lx.front());
  fit.theta_hi = std::exp(lx.back());
  fit.n_points = static_cast<int>(lx.size());

  const QuadFit quad = quadratic_fit(lx, ly);
  fit.curvature = quad.c2;
  fit.curvature_se = quad.c2_se;
  fit.power_law_plausible = std::abs(quad.c2) <= 4.0 * quad.c2_se;

  // Pairs bootstrap for the gamma CI.
  std::vector<double> gammas(bootstrap_resamples);
  const std::size_t m = lx.size();
  std::vector<double> bx(m), by(m);
  for (int b = 0; b < bootstrap_resamples; ++b) {
    for (std::size_t i = 0; i < m; ++i) {
      const double u = uniform_draw(bootstrap_seed,
                                    static_cast<std::uint64_t>(b),
                                    static_cast<std::uint64_t>(i));
      const std::size_t j =
          std::min(m - 1, static_cast<std::size_t>(u * static_cast<double>(m)));
      bx[i] = lx[j];
      by[i] = ly[j];
    }
    // Degenerate resamples (all one point) are vanishingly rare but guard
    // against a zero-variance x draw.
    double spread = 0.0;
    for (std::size_t i = 1; i < m; ++i) spread += std::abs(bx[i] - bx[0]);
    if (spread == 0.0) {
      gammas[b] = fit.gamma_hat;
      continue;
    }
    gammas[b] = -linear_fit(bx, by).slope - 1.0;
  }
  const double lo = percentile(gammas, 0.025);
  const double hi = percentile(std::move(gammas), 0.975);
  fit.ci_gamma = Interval{lo, hi};
  return fit;
}

GoalReport check_goal_criterion(const CharFnTable& table, double c,
                                double gamma, double plausibility_cap) {
  if (!(c > 0.0) || !(gamma > 0.0))
    throw std::invalid_argument("check_goal_criterion: need C > 0, gamma > 0");
  GoalReport rep;
  rep.plausibility_cap = plausibility_cap;
  rep.c_exceeds_cap = c > plausibility_cap;
  rep.pass = true;
  for (std::size_t k = 0; k < table.thetas.size(); ++k) {
    const double th = table.thetas[k];
    if (th < 1.0) continue;
    const double bound = std::min(1.0, c * std::pow(th, -(1.0 + gamma)));
    const double lower = table.modulus(k) - 3.0 * table.se[k];
    const double margin = bound - lower;
    rep.thetas.push_back(th);
    rep.margins.push_back(margin);
    if (margin < 0.0 && rep.pass) {
      rep.pass = false;
      rep.first_violation_theta = th;
    }
  }
  return rep;
}

BetaWindow beta_window(double alpha, double gamma) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("beta_window: alpha outside (0,1)");
  if (!(gamma >= 0.0))
    throw std::invalid_argument("beta_window: gamma must be >= 0");
  BetaWindow w;
  w.lo = 2.0 * (1.0 + gamma) / (1.0 + alpha);
  w.hi = 2.0;
  w.empty = !(w.lo < w.hi);
  return w;
}

double delta_schedule(double theta, double beta, double t) {
  if (!(beta > 0.0 && beta < 2.0))
    throw std::invalid_argument("delta_schedule: beta outside (0,2)");
  if (!(t > 0.0)) throw std::invalid_argument("delta_schedule: t <= 0");
  const double threshold = std::pow(std::min(t, 1.0), -1.0 / beta);
  if (!(std::abs(theta) > threshold))
    throw std::domain_error("theta-too-small: need |theta| > (t^1)^{-1/beta}");
  return std::pow(std::abs(theta), -beta);
}

Est7Terms est7_bound(const BoundParams& params, double theta, double delta,
                     const TruncatedCoeffs& tc) {
  if (!(delta > 0.0) || !(delta < std::min(tc.spec().t, 1.0)))
    throw std::invalid_argument("est7_bound: delta outside (0, min(t,1))");
  Est7Terms terms;
  const double eps = tc.spec().eps;
  const double alpha = tc.spec().alpha;
  const int n = params.n;
  const double eps_pow = std::pow(eps, -2.0 * n);
  terms.loc_sigma = params.loc_prefactor * eps_pow * params.k_n * params.m_n *
                    std::pow(tc.sup_sigma_bar(), 2.0 * n) * std::pow(delta, n);
  terms.loc_drift = params.loc_prefactor * eps_pow * params.k_n *
                    std::pow(delta, 2.0 * n) *
                    std::pow(tc.sup_b_bar(), 2.0 * n);
  terms.loc = terms.loc_sigma + terms.loc_drift;
  const double osc = std::pow(std::abs(theta) * std::sqrt(delta),
                              -static_cast<double>(params.n2));
  terms.ibp = params.c_eps_n2 * osc;
  terms.girsanov = params.c_alpha * std::pow(delta, 0.5 * (1.0 + alpha));
  terms.drift_ibp = tc.sup_psi() * params.c_tilde_eps_n2 * osc;
  terms.total = terms.loc + terms.ibp + terms.girsanov + terms.drift_ibp;
  return terms;
}

}  // namespace sdelab
