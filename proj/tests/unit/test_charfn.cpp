#include <doctest.h>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "sdelab/charfn.hpp"
#include "sdelab/mollifier.hpp"
#include "sdelab/parallel.hpp"
#include "sdelab/rng.hpp"

using namespace sdelab;
using sdelab::testing::make_spec;

namespace {

std::vector<double> normal_samples(std::int64_t n, std::uint64_t seed) {
  std::vector<double> xs(n);
  for (std::int64_t i = 0; i < n; ++i)
    xs[i] = normal_draw(seed, 0, static_cast<std::uint64_t>(i));
  return xs;
}

CharFnTable synthetic_table(const std::vector<double>& thetas,
                            const std::function<double(double)>& modulus,
                            double se) {
  CharFnTable t;
  t.thetas = thetas;
  t.n_paths = 1000000;
  t.t = 1.0;
  t.eps = 6.0;
  t.y0 = 0.0;
  t.knot = 9.0;
  for (double th : thetas) {
    t.re.push_back(modulus(th));
    t.im.push_back(0.0);
    t.se.push_back(se);
  }
  return t;
}

}  // namespace

TEST_CASE("theta = 0 reproduces the localized mass exactly") {
  const auto xs = normal_samples(50000, 3);
  const std::vector<double> thetas{0.0, 1.0, 2.0};
  const CharFnTable t = localized_charfn(xs, thetas, 0.0, 6.0, 0.0, 1.0);
  CHECK(t.im[0] == 0.0);
  CHECK(t.re[0] > 0.999);  // +-6 sigma window captures almost all mass
  CHECK(t.re[0] <= 1.0);
  // Modulus bound: never above the localized mass plus noise.
  for (std::size_t k = 0; k < t.thetas.size(); ++k)
    CHECK(t.modulus(k) <= t.re[0] + 4.0 * t.se[k] + 1e-15);
}

TEST_CASE("theta = 0 equals the blocked mean of the mollifier values") {
  // Same samples, same block accumulation order: exact equality, not
  // approximate.
  const auto xs = normal_samples(3 * kParallelBlock + 123, 9);
  const std::vector<double> thetas{0.0};
  const CharFnTable t = localized_charfn(xs, thetas, 0.0, 1.5, 0.0, 1.0);
  const Mollifier phi(1.5, 1.5 * 1.5);
  const std::int64_t nb = block_count(static_cast<std::int64_t>(xs.size()));
  std::vector<double> bsum(nb, 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i)
    bsum[static_cast<std::int64_t>(i) / kParallelBlock] += phi.value(xs[i]);
  double total = 0.0;
  for (double b : bsum) total += b;
  CHECK(t.re[0] == total / static_cast<double>(xs.size()));
}

TEST_CASE("point mass outside the window gives the zero table") {
  std::vector<double> xs(1000, 10.0);
  const std::vector<double> thetas{0.0, 1.0, 3.0};
  const CharFnTable t = localized_charfn(xs, thetas, 0.0, 0.5, 0.0, 1.0);
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    CHECK(t.re[k] == 0.0);
    CHECK(t.im[k] == 0.0);
  }
}

TEST_CASE("Gaussian characteristic function within noise and truncation") {
  const std::int64_t n = 200000;
  const auto xs = normal_samples(n, 5);
  std::vector<double> thetas;
  for (double th = 0.0; th <= 3.0; th += 0.25) thetas.push_back(th);
  const CharFnTable t = localized_charfn(xs, thetas, 0.0, 6.0, 0.0, 1.0);
  for (std::size_t k = 0; k < t.thetas.size(); ++k) {
    const double target = std::exp(-0.5 * t.thetas[k] * t.thetas[k]);
    CHECK(std::abs(t.modulus(k) - target) <= 4.0 * t.se[k] + 1e-6);
  }
}

TEST_CASE("conjugate symmetry is exact on paired grids") {
  const auto xs = normal_samples(20000, 7);
  const std::vector<double> pos{0.5, 1.0, 2.0};
  const std::vector<double> neg{-0.5, -1.0, -2.0};
  const CharFnTable tp = localized_charfn(xs, pos, 0.0, 6.0, 0.0, 1.0);
  const CharFnTable tn = localized_charfn(xs, neg, 0.0, 6.0, 0.0, 1.0);
  // tn sorts ascending: -2, -1, -0.5.
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(tn.re[k] == tp.re[2 - k]);
    CHECK(tn.im[k] == -tp.im[2 - k]);
  }
}

TEST_CASE("weighted estimation applies per-sample weights") {
  std::vector<double> xs{0.0, 0.0};
  std::vector<double> w{2.0, 0.0};
  const std::vector<double> thetas{0.0};
  const CharFnTable t = localized_charfn(xs, thetas, 0.0, 1.0, 0.0, 1.0, w);
  CHECK(t.re[0] == doctest::Approx(1.0));
}

TEST_CASE("decay fit on exact power-law data") {
  std::vector<double> thetas;
  for (double th = 1.0; th <= 120.0; th *= 1.15) thetas.push_back(th);
  const CharFnTable t = synthetic_table(
      thetas, [](double th) { return std::pow(th, -2.0); }, 1e-9);
  const DecayFit fit = fit_decay(t);
  CHECK(fit.gamma_hat == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(fit.c_hat == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(fit.power_law_plausible);
}

TEST_CASE("decay fit flags super-polynomial decay") {
  std::vector<double> thetas;
  for (double th = 1.0; th <= 3.5; th *= 1.08) thetas.push_back(th);
  const CharFnTable t = synthetic_table(
      thetas, [](double th) { return std::exp(-0.5 * th * th); }, 1e-9);
  const DecayFit fit = fit_decay(t);
  CHECK(!fit.power_law_plausible);
  CHECK(fit.curvature < 0.0);
}

TEST_CASE("decay fit with injected noise brackets the exponent") {
  std::vector<double> thetas;
  for (double th = 1.0; th <= 60.0; th *= 1.12) thetas.push_back(th);
  CharFnTable t = synthetic_table(
      thetas, [](double th) { return std::pow(th, -1.5); }, 1e-3);
  for (std::size_t k = 0; k < t.re.size(); ++k)
    t.re[k] += 1e-3 * normal_draw(31, 0, k);
  const DecayFit fit = fit_decay(t);
  CHECK(fit.gamma_hat == doctest::Approx(0.5).epsilon(0.15));
  CHECK(fit.ci_gamma.lo <= 0.5);
  CHECK(fit.ci_gamma.hi >= 0.5);
}

TEST_CASE("insufficient admissible points raises the dedicated error") {
  std::vector<double> thetas{1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
  const CharFnTable t = synthetic_table(
      thetas, [](double th) { return th < 3.0 ? 0.5 : 1e-9; }, 1e-4);
  CHECK_THROWS_AS((void)fit_decay(t), InsufficientSignal);
}

TEST_CASE("goal criterion: Gaussian passes, slow power law fails") {
  std::vector<double> thetas;
  for (double th = 1.0; th <= 8.0; th *= 1.1) thetas.push_back(th);
  const CharFnTable g = synthetic_table(
      thetas, [](double th) { return std::exp(-0.5 * th * th); }, 1e-6);
  const GoalReport pass = check_goal_criterion(g, 1.0, 0.5);
  CHECK(pass.pass);

  const CharFnTable slow = synthetic_table(
      thetas, [](double th) { return std::pow(th, -1.2); }, 1e-9);
  const GoalReport fail = check_goal_criterion(slow, 1.0, 0.5);
  CHECK(!fail.pass);
  CHECK(fail.first_violation_theta > 1.0);

  const GoalReport cap = check_goal_criterion(slow, 1e6, 0.5);
  CHECK(cap.pass);
  CHECK(cap.c_exceeds_cap);
}

TEST_CASE("beta window arithmetic") {
  const BetaWindow w = beta_window(0.5, 0.25);
  CHECK(w.lo == 5.0 / 3.0);
  CHECK(w.hi == 2.0);
  CHECK(!w.empty);

  CHECK(beta_window(0.5, 0.5).empty);
  CHECK(beta_window(0.3, 0.4).empty);
  // Dyadic grids keep the gamma-vs-alpha comparison exact in floating point.
  for (double alpha : {0.125, 0.25, 0.5, 0.75, 0.875}) {
    const BetaWindow z = beta_window(alpha, 0.0);
    CHECK(!z.empty);
    CHECK(z.lo == doctest::Approx(2.0 / (1.0 + alpha)));
    for (int k = 0; k < 16; ++k) {
      const double gamma = k / 16.0;
      CHECK(beta_window(alpha, gamma).empty == (gamma >= alpha));
    }
  }
}

TEST_CASE("delta schedule values and domain") {
  CHECK(delta_schedule(4.0, 1.8, 1.0) ==
        doctest::Approx(0.082469244423305891).epsilon(1e-12));
  CHECK_THROWS_AS(delta_schedule(1.0, 1.5, 1.0), std::domain_error);
  CHECK_THROWS_AS(delta_schedule(0.5, 1.5, 1.0), std::domain_error);
  // Monotone decreasing in beta for theta > 1.
  CHECK(delta_schedule(10.0, 1.9, 1.0) < delta_schedule(10.0, 1.2, 1.0));
  // Smaller t shifts the admissible threshold up.
  CHECK_THROWS_AS(delta_schedule(1.5, 1.0, 0.5), std::domain_error);
  CHECK(delta_schedule(2.5, 1.0, 0.5) == doctest::Approx(0.4));
}

TEST_CASE("bound terms: drift terms vanish without drift") {
  const CoefficientSpec spec = make_spec("poly(1)", "poly()");
  const TruncatedCoeffs tc(spec);
  BoundParams bp;
  const Est7Terms terms = est7_bound(bp, 5.0, 0.04, tc);
  CHECK(terms.loc_drift == 0.0);
  CHECK(terms.drift_ibp == 0.0);
  CHECK(terms.loc_sigma > 0.0);
  CHECK(terms.total ==
        doctest::Approx(terms.loc + terms.ibp + terms.girsanov));
}

TEST_CASE("bound terms: schedule exponents and n2 doubling") {
  const CoefficientSpec spec = make_spec("poly(1)", "abspow(1,0,0.5)", 0.5);
  const TruncatedCoeffs tc(spec);
  BoundParams bp;
  bp.n2 = 3;
  const double beta = 1.8;
  const double th1 = 4.0, th2 = 16.0;
  const Est7Terms a = est7_bound(bp, th1, std::pow(th1, -beta), tc);
  const Est7Terms b = est7_bound(bp, th2, std::pow(th2, -beta), tc);
  const double lr = std::log(th2 / th1);
  CHECK(std::log(b.loc_sigma / a.loc_sigma) / lr ==
        doctest::Approx(-bp.n * beta).epsilon(1e-9));
  CHECK(std::log(b.loc_drift / a.loc_drift) / lr ==
        doctest::Approx(-2.0 * bp.n * beta).epsilon(1e-9));
  CHECK(std::log(b.ibp / a.ibp) / lr ==
        doctest::Approx(-(2.0 - beta) * bp.n2 / 2.0).epsilon(1e-9));
  CHECK(std::log(b.girsanov / a.girsanov) / lr ==
        doctest::Approx(-(1.0 + spec.alpha) * beta / 2.0).epsilon(1e-9));

  BoundParams bp2 = bp;
  bp2.n2 = 6;
  const Est7Terms c = est7_bound(bp2, th1, std::pow(th1, -beta), tc);
  CHECK(c.ibp == doctest::Approx(a.ibp * a.ibp).epsilon(1e-9));
}
