#include "sdelab/girsanov.hpp"

#include <cmath>
#include <stdexcept>

#include "sdelab/parallel.hpp"

namespace sdelab {

GirsanovWeights girsanov_weight(const WindowEnsemble& we,
                                const TruncatedCoeffs& tc) {
  if (!we.driftless)
    throw std::invalid_argument(
        "girsanov_weight: window must be simulated driftless (under P)");
  const std::int64_t n = we.n_paths;
  const std::int64_t steps = we.window.n_steps;
  const double dt = we.window.dt();

  GirsanovWeights out;
  out.delta = we.window.t_end - we.window.t_start;
  out.psi_sup = tc.sup_psi();
  out.z.resize(n);
  out.z_sde.resize(n);
  out.log_z.resize(n);

  for_blocks(n, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t p = lo; p < hi; ++p) {
      double log_z = 0.0;
      double z_sde = 1.0;
      for (std::int64_t k = 0; k < steps; ++k) {
        const double psi = tc.psi(we.x_at(p, k));
        const double dw = we.dw_at(p, k);
        log_z += psi * dw - 0.5 * psi * psi * dt;
        z_sde *= 1.0 + psi * dw;
      }
      if (std::abs(log_z) > 700.0)
        throw std::runtime_error(
            "girsanov_weight: |log Z| > 700 (psi_sup * delta = " +
            std::to_string(out.psi_sup * out.delta) + ")");
      out.log_z[p] = log_z;
      out.z[p] = std::exp(log_z);
      out.z_sde[p] = z_sde;
    }
  });

  double gap_sum = 0.0, z_sum = 0.0, zsde_sum = 0.0;
  for (std::int64_t p = 0; p < n; ++p) {
    gap_sum += std::abs(out.z_sde[p] - out.z[p]) / out.z[p];
    z_sum += out.z[p];
    zsde_sum += out.z_sde[p];
  }
  out.mean_abs_rel_gap = gap_sum / static_cast<double>(n);
  out.weak_gap = std::abs(zsde_sum - z_sum) / static_cast<double>(n);
  return out;
}

MomentBoundReport moment_bound_check(const GirsanovWeights& w, double p,
                                     std::uint64_t bootstrap_seed,
                                     int bootstrap_resamples) {
  if (!(p > 1.0)) throw std::invalid_argument("moment_bound_check: p <= 1");
  MomentBoundReport rep;
  rep.p = p;
  std::vector<double> zp(w.z.size());
  if (p == 2.0) {
    for (std::size_t i = 0; i < w.z.size(); ++i) zp[i] = w.z[i] * w.z[i];
  } else if (p == 4.0) {
    for (std::size_t i = 0; i < w.z.size(); ++i) {
      const double z2 = w.z[i] * w.z[i];
      zp[i] = z2 * z2;
    }
  } else {
    for (std::size_t i = 0; i < w.z.size(); ++i) zp[i] = std::pow(w.z[i], p);
  }
  const MeanSE m = mean_se(zp);
  rep.empirical = m.mean;
  rep.se = m.se;
  rep.ci = bootstrap_mean_ci(zp, bootstrap_resamples, 0.95, bootstrap_seed);
  rep.bound = exp_martingale_moment_bound(p, w.delta, w.psi_sup);
  rep.pass = rep.ci.hi <= rep.bound * 1.02;
  return rep;
}

MeanSE reweighted_expectation(const std::function<double(double)>& f,
                              const WindowEnsemble& we,
                              const GirsanovWeights& w,
                              const std::function<bool(std::int64_t)>& event) {
  if (static_cast<std::int64_t>(w.z.size()) != we.n_paths)
    throw std::invalid_argument("reweighted_expectation: weight/path mismatch");
  return mean_se_fn(we.n_paths, [&](std::int64_t p) {
    if (event && !event(p)) return 0.0;
    return f(we.terminal(p)) * w.z[p];
  });
}

double exp_martingale_moment_bound(double p, double delta, double psi_sup) {
  return std::exp(0.5 * p * (p - 1.0) * delta * psi_sup * psi_sup);
}

double z_norm_bound(double q, double delta, double psi_sup) {
  return std::exp(0.5 * (q - 1.0) * delta * psi_sup * psi_sup);
}

CAlphaBound compute_C_alpha(const TruncatedCoeffs& tc, double delta,
                            double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("compute_C_alpha: alpha outside (0,1)");
  const double psi_sup = tc.sup_psi();
  CAlphaBound out;
  const double q = 2.0 / (1.0 - alpha);
  out.holder_branch = 2.0 / std::sqrt(1.0 + alpha) *
                      z_norm_bound(q, delta, psi_sup) *
                      std::pow(tc.sup_sigma_bar(), alpha);
  out.drift_branch = psi_sup * psi_sup * z_norm_bound(2.0, delta, psi_sup);
  out.value = std::max(out.holder_branch, out.drift_branch);
  return out;
}

}  // namespace sdelab
