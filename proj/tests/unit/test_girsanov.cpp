#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "sdelab/girsanov.hpp"
#include "sdelab/rng.hpp"
#include "sdelab/sde.hpp"
#include "sdelab/stats.hpp"

using namespace sdelab;
using sdelab::testing::make_spec;

namespace {

WindowEnsemble make_window(const CoefficientSpec& spec,
                           const TruncatedCoeffs& tc, double delta,
                           std::int64_t n_paths, std::uint64_t seed,
                           std::int64_t steps = 128) {
  WindowConfig wc;
  wc.t = spec.t;
  wc.delta = delta;
  wc.window_steps = steps;
  wc.pre_steps = 128;
  wc.n_paths = n_paths;
  wc.seed = seed;
  wc.driftless = true;
  return simulate_window(spec, tc, wc);
}

}  // namespace

TEST_CASE("zero drift ratio gives unit weights exactly") {
  const CoefficientSpec spec = make_spec("poly(1)", "poly()");
  const TruncatedCoeffs tc(spec);
  const WindowEnsemble we = make_window(spec, tc, 0.1, 200, 4);
  const GirsanovWeights w = girsanov_weight(we, tc);
  for (double z : w.z) CHECK(z == 1.0);
  for (double z : w.z_sde) CHECK(z == 1.0);
  CHECK(w.psi_sup == 0.0);
}

TEST_CASE("constant drift ratio: lognormal weight moments") {
  // sigma = 1, b = 0.8: psi = 0.8 everywhere, so E[Z^2] = exp(c^2 delta)
  // exactly, which is the moment bound with equality.
  const CoefficientSpec spec = make_spec("poly(1)", "poly(0.8)");
  const TruncatedCoeffs tc(spec);
  const double delta = 0.16;
  const WindowEnsemble we = make_window(spec, tc, delta, 200000, 5);
  const GirsanovWeights w = girsanov_weight(we, tc);
  CHECK(w.psi_sup == doctest::Approx(0.8).epsilon(1e-9));

  const MeanSE zm = mean_se(w.z);
  CHECK(std::abs(zm.mean - 1.0) <= 4.0 * zm.se);

  const MomentBoundReport m2 = moment_bound_check(w, 2.0);
  CHECK(m2.bound == doctest::Approx(std::exp(0.64 * delta)).epsilon(1e-12));
  CHECK(std::abs(m2.empirical - m2.bound) <= 2.0 * m2.se);
  CHECK(m2.pass);

  const MomentBoundReport m4 = moment_bound_check(w, 4.0);
  CHECK(m4.pass);
}

TEST_CASE("weights are strictly positive and the forms agree to O(dt-ish)") {
  const CoefficientSpec spec = make_spec("poly(2) + sin(1,1,0)",
                                         "abspow(1,0,0.5)", 0.5, 0.0, 0.0, 0.5,
                                         5.5, 0.9);
  const TruncatedCoeffs tc(spec);
  const WindowEnsemble we = make_window(spec, tc, 0.05, 20000, 6);
  const GirsanovWeights w = girsanov_weight(we, tc);
  for (double z : w.z) CHECK(z > 0.0);
  CHECK(w.mean_abs_rel_gap < 0.01);
  const MomentBoundReport m2 = moment_bound_check(w, 2.0);
  CHECK(m2.pass);
}

TEST_CASE("martingale mean across a delta ladder") {
  const CoefficientSpec spec = make_spec("poly(1)", "abspow(1,0,0.5)", 0.5);
  const TruncatedCoeffs tc(spec);
  for (double delta : {0.01, 0.02, 0.04, 0.08, 0.16}) {
    const WindowEnsemble we = make_window(spec, tc, delta, 100000, 7);
    const GirsanovWeights w = girsanov_weight(we, tc);
    const MeanSE zm = mean_se(w.z);
    CHECK(std::abs(zm.mean - 1.0) <= 4.0 * zm.se);
  }
}

TEST_CASE("reweighting restores the drift for constant psi") {
  // X under P is y + W; reweighting by Z must produce E[X_t] = y + c delta.
  const CoefficientSpec spec = make_spec("poly(1)", "poly(0.8)");
  const TruncatedCoeffs tc(spec);
  const double delta = 0.25;
  WindowConfig wc;
  wc.t = 1.0;
  wc.delta = delta;
  wc.window_steps = 128;
  wc.n_paths = 200000;
  wc.seed = 8;
  wc.driftless = true;
  wc.fixed_start = 0.3;
  const WindowEnsemble we = simulate_window(spec, tc, wc);
  const GirsanovWeights w = girsanov_weight(we, tc);
  const MeanSE est =
      reweighted_expectation([](double x) { return x; }, we, w);
  CHECK(std::abs(est.mean - (0.3 + 0.8 * delta)) <= 4.0 * est.se);

  const MeanSE unit =
      reweighted_expectation([](double) { return 1.0; }, we, w);
  CHECK(std::abs(unit.mean - 1.0) <= 4.0 * unit.se);
}

TEST_CASE("reweighted P-estimate agrees with a direct drifted simulation") {
  const CoefficientSpec spec = make_spec("poly(1)", "abspow(1,0,0.5)", 0.5);
  const TruncatedCoeffs tc(spec);
  WindowConfig wc;
  wc.t = 1.0;
  wc.delta = 0.0625;
  wc.window_steps = 256;
  wc.pre_steps = 256;
  wc.n_paths = 200000;
  wc.seed = 9;
  wc.driftless = true;
  const WindowEnsemble wp = simulate_window(spec, tc, wc);
  const GirsanovWeights w = girsanov_weight(wp, tc);
  wc.driftless = false;
  wc.seed = 1009;
  const WindowEnsemble wq = simulate_window(spec, tc, wc);

  const MeanSE lhs =
      reweighted_expectation([](double x) { return x; }, wp, w);
  const MeanSE rhs =
      mean_se_fn(wq.n_paths, [&](std::int64_t p) { return wq.terminal(p); });
  const double se = std::sqrt(lhs.se * lhs.se + rhs.se * rhs.se);
  CHECK(std::abs(lhs.mean - rhs.mean) <= 4.0 * se);
}

TEST_CASE("weight overflow guard trips on absurd drift ratios") {
  CoefficientSpec spec = make_spec("poly(0.001)", "poly(100)");
  const TruncatedCoeffs tc(spec);
  WindowConfig wc;
  wc.t = 1.0;
  wc.delta = 0.25;
  wc.window_steps = 64;
  wc.n_paths = 50;
  wc.seed = 10;
  wc.driftless = true;
  wc.fixed_start = 0.0;
  const WindowEnsemble we = simulate_window(spec, tc, wc);
  CHECK_THROWS_WITH_AS(girsanov_weight(we, tc),
                       doctest::Contains("|log Z| > 700"), std::runtime_error);
}

TEST_CASE("moment bound helpers") {
  CHECK(exp_martingale_moment_bound(2.0, 0.1, 0.0) == 1.0);
  CHECK(exp_martingale_moment_bound(2.0, 0.1, 2.0) ==
        doctest::Approx(std::exp(0.4)));
  CHECK(z_norm_bound(2.0, 0.1, 2.0) == doctest::Approx(std::exp(0.2)));
}

TEST_CASE("C_alpha bound: plug-in branches") {
  {
    const CoefficientSpec spec = make_spec("poly(1)", "poly()");
    const TruncatedCoeffs tc(spec);
    const CAlphaBound b = compute_C_alpha(tc, 0.04, 0.5);
    CHECK(b.drift_branch == 0.0);
    CHECK(b.holder_branch == doctest::Approx(2.0 / std::sqrt(1.5)));
    CHECK(b.value == b.holder_branch);
  }
  {
    // alpha -> 1: the L^{2/(1-alpha)} exponent explodes; the bound reports
    // its growth rather than failing.
    const CoefficientSpec spec = make_spec("poly(1)", "poly(0.8)");
    const TruncatedCoeffs tc(spec);
    const CAlphaBound lo = compute_C_alpha(tc, 0.04, 0.5);
    const CAlphaBound hi = compute_C_alpha(tc, 0.04, 0.999);
    CHECK(hi.holder_branch > lo.holder_branch);
    CHECK(std::isfinite(lo.value));
  }
  {
    // Plug-in bound must dominate a direct Monte Carlo norm estimate.
    const CoefficientSpec spec = make_spec("poly(1)", "poly(0.8)");
    const TruncatedCoeffs tc(spec);
    const double delta = 0.04;
    const double alpha = 0.5;
    const WindowEnsemble we = make_window(spec, tc, delta, 100000, 11);
    const GirsanovWeights w = girsanov_weight(we, tc);
    const double q = 2.0 / (1.0 - alpha);
    double sum_q = 0.0, sum_2 = 0.0;
    for (double z : w.z) {
      sum_q += std::pow(z, q);
      sum_2 += z * z;
    }
    const double n = static_cast<double>(w.z.size());
    const double norm_q = std::pow(sum_q / n, 1.0 / q);
    const double norm_2 = std::sqrt(sum_2 / n);
    CHECK(z_norm_bound(q, delta, w.psi_sup) >= norm_q * 0.999);
    CHECK(z_norm_bound(2.0, delta, w.psi_sup) >= norm_2 * 0.999);
    const CAlphaBound b = compute_C_alpha(tc, delta, alpha);
    CHECK(b.value >=
          std::max(2.0 / std::sqrt(1.0 + alpha) * norm_q *
                       std::pow(tc.sup_sigma_bar(), alpha),
                   w.psi_sup * w.psi_sup * norm_2) *
              0.999);
  }
}

TEST_CASE("exponential and product forms converge under grid refinement") {
  // Couple resolutions by summing fine increments in pairs, then compare the
  // per-path gap and the weak (mean) gap of the two weight forms.
  const CoefficientSpec spec = make_spec("poly(2) + sin(1,1,0)",
                                         "abspow(1,0,0.5)", 0.5, 0.0, 0.0, 0.5,
                                         5.5, 0.9);
  const TruncatedCoeffs tc(spec);
  const double delta = 0.125;
  const std::int64_t n_paths = 40000;
  const std::int64_t fine_steps = 512;

  std::vector<double> fine(fine_steps);
  std::vector<double> lx, pathwise, weak;
  for (std::int64_t steps = 64; steps <= fine_steps; steps *= 2) {
    WindowEnsemble we;
    we.window = SimGrid{1.0 - delta, 1.0, steps};
    we.n_paths = n_paths;
    we.seed = 13;
    we.driftless = true;
    we.x_start.assign(n_paths, 0.1);
    we.xbar.resize(n_paths * (steps + 1));
    we.dw.resize(n_paths * steps);
    const std::int64_t group = fine_steps / steps;
    const double fine_sqdt =
        std::sqrt(delta / static_cast<double>(fine_steps));
    for (std::int64_t p = 0; p < n_paths; ++p) {
      for (std::int64_t k = 0; k < fine_steps; ++k)
        fine[k] = fine_sqdt * normal_draw(13, p, k);
      double x = 0.1;
      we.xbar[p * (steps + 1)] = x;
      for (std::int64_t k = 0; k < steps; ++k) {
        double dw = 0.0;
        for (std::int64_t j = 0; j < group; ++j) dw += fine[k * group + j];
        we.dw[p * steps + k] = dw;
        x += tc.sigma_bar(x) * dw;
        we.xbar[p * (steps + 1) + k + 1] = x;
      }
    }
    const GirsanovWeights w = girsanov_weight(we, tc);
    lx.push_back(std::log(delta / static_cast<double>(steps)));
    pathwise.push_back(std::log(w.mean_abs_rel_gap));
    weak.push_back(std::log(std::max(w.weak_gap, 1e-300)));
  }
  const LinearFit path_fit = linear_fit(lx, pathwise);
  // Per-path gap: sum of psi^2 (dW^2 - dt)/2 terms, RMS of order sqrt(dt).
  CHECK(path_fit.slope == doctest::Approx(0.5).epsilon(0.35));
  // Weak-form gap: both forms have mean one up to O(dt); just require it to
  // shrink with refinement and sit far below the per-path gap.
  CHECK(weak.back() <= pathwise.back());
}
