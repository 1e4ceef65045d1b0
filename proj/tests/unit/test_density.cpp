#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "sdelab/density.hpp"
#include "sdelab/numeric.hpp"
#include "sdelab/rng.hpp"

using namespace sdelab;

namespace {

CharFnTable dense_table(double cutoff, int n,
                        const std::function<double(double)>& re,
                        double se = 0.0) {
  CharFnTable t;
  t.n_paths = 1000000;
  t.eps = 6.0;
  t.t = 1.0;
  for (int i = 0; i < n; ++i) {
    const double th = cutoff * i / (n - 1);
    t.thetas.push_back(th);
    t.re.push_back(re(th));
    t.im.push_back(0.0);
    t.se.push_back(se);
  }
  return t;
}

std::vector<double> grid(double lo, double hi, int n) {
  std::vector<double> xs(n);
  for (int i = 0; i < n; ++i) xs[i] = lo + (hi - lo) * i / (n - 1);
  return xs;
}

}  // namespace

TEST_CASE("inverting the exact Gaussian characteristic function") {
  const CharFnTable t = dense_table(
      8.0, 257, [](double th) { return std::exp(-0.5 * th * th); });
  const auto xs = grid(-2.0, 2.0, 129);
  const DensityProfile prof = levy_invert(t, xs, 8.0);
  CHECK(prof.values[64] ==
        doctest::Approx(0.3989422804014327).epsilon(2.5e-6));
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double target = 0.3989422804014327 * std::exp(-0.5 * xs[j] * xs[j]);
    CHECK(std::abs(prof.values[j] - target) < 1e-5);
  }
  CHECK(prof.imag_residue < 1e-14);
  CHECK(prof.budget.quadrature < 1e-5);
  // Real even table: the profile is exactly symmetric.
  for (int j = 0; j < 64; ++j) CHECK(prof.values[j] == prof.values[128 - j]);
  // Statistical nonnegativity within the budget.
  for (double v : prof.values) CHECK(v >= -prof.budget.total());
  // Total mass over the window never exceeds one (plus tolerance).
  const double mass =
      trapezoid_uniform(prof.values, (prof.xs.back() - prof.xs.front()) /
                                         static_cast<double>(prof.xs.size() - 1));
  CHECK(mass <= 1.0 + 1e-6);
}

TEST_CASE("all-zero table inverts to the zero profile") {
  const CharFnTable t = dense_table(4.0, 65, [](double) { return 0.0; });
  const auto xs = grid(-1.0, 1.0, 65);
  const DensityProfile prof = levy_invert(t, xs, 4.0);
  for (double v : prof.values) CHECK(v == 0.0);
}

TEST_CASE("inversion is linear in the table") {
  const CharFnTable a = dense_table(
      6.0, 129, [](double th) { return std::exp(-0.5 * th * th); });
  const CharFnTable b = dense_table(
      6.0, 129, [](double th) { return std::exp(-th); });
  CharFnTable sum = a;
  for (std::size_t k = 0; k < sum.re.size(); ++k) sum.re[k] += b.re[k];
  const auto xs = grid(-1.5, 1.5, 64);
  const DensityProfile pa = levy_invert(a, xs, 6.0);
  const DensityProfile pb = levy_invert(b, xs, 6.0);
  const DensityProfile ps = levy_invert(sum, xs, 6.0);
  for (std::size_t j = 0; j < xs.size(); ++j)
    CHECK(ps.values[j] ==
          doctest::Approx(pa.values[j] + pb.values[j]).epsilon(1e-12));
}

TEST_CASE("local density scaling and the degenerate branch") {
  const CharFnTable t = dense_table(
      6.0, 129, [](double th) { return std::exp(-0.5 * th * th); });
  const auto xs = grid(-1.0, 1.0, 65);
  const DensityProfile base = levy_invert(t, xs, 6.0);
  const DensityProfile half = local_density(0.5, base);
  for (std::size_t j = 0; j < xs.size(); ++j)
    CHECK(half.values[j] == doctest::Approx(0.5 * base.values[j]).epsilon(1e-15));
  const DensityProfile zero = local_density(0.0, base);
  for (double v : zero.values) CHECK(v == 0.0);

  // Scaling commutes with inversion: m0 * invert(table / m0) = invert(table).
  const double m0 = 0.73;
  CharFnTable scaled = t;
  for (std::size_t k = 0; k < scaled.re.size(); ++k) scaled.re[k] /= m0;
  const DensityProfile recombined = local_density(m0, levy_invert(scaled, xs, 6.0));
  for (std::size_t j = 0; j < xs.size(); ++j)
    CHECK(recombined.values[j] ==
          doctest::Approx(base.values[j]).epsilon(1e-12));
}

TEST_CASE("tail model: bounds, rejection, divergence flag") {
  const CharFnTable t = dense_table(
      8.0, 257, [](double th) { return std::pow(1.0 + th, -1.5); });
  const auto xs = grid(-1.0, 1.0, 65);
  CHECK_THROWS_AS(levy_invert(t, xs, 8.0, TailModel::power_law(1.0, -0.5)),
                  std::invalid_argument);
  const DensityProfile prof =
      levy_invert(t, xs, 8.0, TailModel::power_law(1.0, 0.5));
  CHECK(prof.budget.tail ==
        doctest::Approx(1.0 / (3.141592653589793 * 0.5) / std::sqrt(8.0)));
  CHECK(prof.budget.tail_modeled);

  const DensityProfile plain = levy_invert(t, xs, 8.0);
  const HolderReport diverging =
      holder_modulus(plain, t, 0.6, TailModel::power_law(1.0, 0.5));
  CHECK(diverging.tail_divergent);
  CHECK(diverging.tail_exponent == doctest::Approx(0.1));
  const HolderReport fine =
      holder_modulus(plain, t, 0.4, TailModel::power_law(1.0, 0.5));
  CHECK(!fine.tail_divergent);
  // The exponent condition alpha < gamma is exactly the finiteness test.
  for (double alpha = 0.05; alpha < 0.5; alpha += 0.05)
    CHECK(!holder_modulus(plain, t, alpha, TailModel::power_law(1.0, 0.5))
               .tail_divergent);
}

TEST_CASE("Holder modulus of flat and Gaussian profiles") {
  const CharFnTable t = dense_table(
      8.0, 257, [](double th) { return std::exp(-0.5 * th * th); });
  const auto xs = grid(-1.0, 1.0, 65);
  DensityProfile flat = levy_invert(t, xs, 8.0);
  for (auto& v : flat.values) v = 0.25;
  const HolderReport zero = holder_modulus(flat, t, 0.5);
  CHECK(zero.empirical_modulus == 0.0);

  const DensityProfile prof = levy_invert(t, xs, 8.0);
  const HolderReport rep = holder_modulus(prof, t, 0.5);
  CHECK(rep.empirical_modulus > 0.0);
  CHECK(rep.integral_bound > 0.0);
  CHECK(rep.empirical_modulus <= rep.integral_bound + prof.budget.total());
  CHECK(rep.c_alpha_const == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("kernel estimate of a point mass is the kernel itself") {
  std::vector<double> samples(100, 0.4);
  const auto xs = grid(0.0, 0.8, 33);
  const DensityProfile kde = kde_oracle(samples, 0.1, xs);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double z = (xs[j] - 0.4) / 0.1;
    const double target = std::exp(-0.5 * z * z) / (0.1 * 2.5066282746310005);
    CHECK(kde.values[j] == doctest::Approx(target).epsilon(1e-12));
  }
}

TEST_CASE("kernel estimate of a large Gaussian sample") {
  const std::int64_t n = 1000000;
  std::vector<double> samples(n);
  for (std::int64_t i = 0; i < n; ++i)
    samples[i] = normal_draw(41, 0, static_cast<std::uint64_t>(i));
  const auto xs = grid(-2.0, 2.0, 81);
  const DensityProfile kde = kde_oracle(samples, 0.05, xs);
  double worst = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double target =
        0.3989422804014327 * std::exp(-0.5 * xs[j] * xs[j]);
    worst = std::max(worst, std::abs(kde.values[j] - target));
  }
  CHECK(worst <= 5e-3);
}

TEST_CASE("inversion rejects tables that miss zero or the cutoff") {
  CharFnTable t = dense_table(4.0, 65, [](double) { return 1.0; });
  const auto xs = grid(-1.0, 1.0, 65);
  CHECK_THROWS_AS(levy_invert(t, xs, 8.0), std::invalid_argument);
  t.thetas.erase(t.thetas.begin());
  t.re.erase(t.re.begin());
  t.im.erase(t.im.begin());
  t.se.erase(t.se.begin());
  CHECK_THROWS_AS(levy_invert(t, xs, 4.0), std::invalid_argument);
}
