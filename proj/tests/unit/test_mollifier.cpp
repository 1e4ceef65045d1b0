#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "sdelab/mollifier.hpp"
#include "sdelab/numeric.hpp"

using namespace sdelab;

TEST_CASE("bump kernel values at the knots and midpoint") {
  const BumpParams p{1.0, 2.0, RampOrientation::rising};
  CHECK(bump_f(p, 0.5) == 0.0);
  CHECK(bump_f(p, 2.5) == 0.0);
  // Closed form at the midpoint: exp(-4).
  CHECK(bump_f(p, 1.5) ==
        doctest::Approx(0.018315638888734179).epsilon(1e-13));
  // Essential singularity forces decay to zero at both knots.
  CHECK(bump_f(p, 1.0 + 1e-9) == 0.0);
  CHECK(bump_f(p, 2.0 - 1e-9) == 0.0);
  CHECK(bump_f(p, 1.001) < 1e-200);
}

TEST_CASE("bump kernel rejects inverted knots") {
  CHECK_THROWS_AS(bump_f(BumpParams{2.0, 1.0}, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(SmoothRamp(BumpParams{1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("smooth ramp endpoints, midpoint, and monotonicity") {
  const SmoothRamp g(BumpParams{1.0, 2.0});
  CHECK(g.value(0.9) == 0.0);
  CHECK(g.value(2.1) == 1.0);
  // The kernel is symmetric about the midpoint, so the normalized integral
  // there is exactly one half.
  CHECK(g.value(1.5) == doctest::Approx(0.5).epsilon(1e-11));
  double prev = -1.0;
  for (int i = 0; i <= 2000; ++i) {
    const double v = g.value(0.8 + 1.4 * i / 2000.0);
    CHECK(v >= prev - 1e-15);
    prev = v;
  }
}

TEST_CASE("smooth ramp against direct quadrature") {
  const BumpParams p{1.0, 2.0};
  const SmoothRamp g(p);
  const double norm =
      gauss_legendre([&](double y) { return bump_f(p, y); }, 1.0, 2.0, 4096);
  for (double x : {1.1, 1.3, 1.55, 1.7, 1.9, 1.97}) {
    const double ref =
        gauss_legendre([&](double y) { return bump_f(p, y); }, 1.0, x, 4096) /
        norm;
    CHECK(g.value(x) == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("falling orientation complements the rising ramp") {
  BumpParams p{1.0, 2.0, RampOrientation::falling};
  const SmoothRamp down(p);
  p.orientation = RampOrientation::rising;
  const SmoothRamp up(p);
  for (double x : {0.5, 1.2, 1.7, 2.3})
    CHECK(down.value(x) == doctest::Approx(1.0 - up.value(x)).epsilon(1e-14));
}

TEST_CASE("mollifier plateau, support, and frozen midpoint value") {
  const Mollifier phi(1.0, 1.5);
  CHECK(phi.value(0.0) == 1.0);
  CHECK(phi.value(2.0) == 0.0);
  CHECK(phi.value(-2.0) == 0.0);
  CHECK(phi.value(1.4) == 1.0);
  // g_{1.5,2} is symmetric about 1.75, so phi(1.75) = 1 - 1/2.
  CHECK(phi.value(1.75) == doctest::Approx(0.5).epsilon(1e-11));
  CHECK(phi.value(1.75) ==
        doctest::Approx(phi.value(-1.75)).epsilon(1e-13));
}

TEST_CASE("mollifier parameter validation") {
  CHECK_THROWS_AS(Mollifier(1.0, 0.9), std::invalid_argument);
  CHECK_THROWS_AS(Mollifier(1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(Mollifier(-1.0, 1.5), std::invalid_argument);
  const Mollifier phi(1.0, 1.5);
  CHECK_THROWS_AS(phi.deriv(0.5, 3), std::invalid_argument);
  CHECK_THROWS_AS(phi.deriv(0.5, 0), std::invalid_argument);
}

TEST_CASE("mollifier sandwich between the indicator functions") {
  const double eps = 0.7;
  const Mollifier phi(eps, 1.5 * eps);
  for (int i = 0; i <= 10000; ++i) {
    const double x = -3.0 * eps + 6.0 * eps * i / 10000.0;
    const double v = phi.value(x);
    const double lower = std::abs(x) <= eps ? 1.0 : 0.0;
    const double upper = std::abs(x) <= 2.0 * eps ? 1.0 : 0.0;
    CHECK(v >= lower - 1e-12);
    CHECK(v <= upper + 1e-12);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("mollifier evenness") {
  const Mollifier phi(1.0, 1.5);
  for (int i = 0; i <= 4000; ++i) {
    const double x = 2.5 * i / 4000.0;
    CHECK(phi.value(x) == doctest::Approx(phi.value(-x)).epsilon(1e-12));
  }
}

TEST_CASE("mollifier derivatives match central finite differences") {
  const Mollifier phi(1.0, 1.5);
  const double h = 1e-5;
  // Plateau and far field first.
  CHECK(phi.deriv(0.0, 1) == 0.0);
  CHECK(phi.deriv(3.0, 1) == 0.0);
  CHECK(phi.deriv(0.0, 2) == 0.0);
  // The ramp regions: first derivative is negative on (a, 2eps).
  CHECK(phi.deriv(1.75, 1) < 0.0);
  const double fd =
      (phi.value(1.75 + h) - phi.value(1.75 - h)) / (2.0 * h);
  CHECK(phi.deriv(1.75, 1) == doctest::Approx(fd).epsilon(1e-6));
  // Order 1 against differences of values; order 2 against differences of
  // the analytic first derivative (a plain second difference of values
  // amplifies roundoff by 1/h^2 past the tolerance).
  for (int i = 0; i <= 1200; ++i) {
    const double x = -3.0 + 6.0 * i / 1200.0;
    const double d1 = (phi.value(x + h) - phi.value(x - h)) / (2.0 * h);
    const double d2 = (phi.deriv(x + h, 1) - phi.deriv(x - h, 1)) / (2.0 * h);
    CHECK(std::abs(phi.deriv(x, 1) - d1) < 1e-5);
    CHECK(std::abs(phi.deriv(x, 2) - d2) < 1e-5);
  }
}

TEST_CASE("default knot sits mid-plateau") {
  const Mollifier phi = Mollifier::with_default_knot(2.0);
  CHECK(phi.knot() == doctest::Approx(3.0));
  CHECK(phi.value(2.9) == 1.0);
}
