#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <span>

#include "helpers.hpp"
#include "sdelab/errors.hpp"
#include "sdelab/parallel.hpp"
#include "sdelab/rng.hpp"
#include "sdelab/sde.hpp"
#include "sdelab/stats.hpp"

using namespace sdelab;
using sdelab::testing::make_spec;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("degenerate noise: paths stay at the start") {
  const CoefficientSpec spec = make_spec("poly()", "poly()", 1.0, 0.0, 0.7);
  const PathEnsemble ens =
      simulate_euler(spec, SimGrid{0.0, 1.0, 64}, 100, 3);
  for (double x : ens.x_terminal) CHECK(x == 0.7);
}

TEST_CASE("driftless unit diffusion matches the Gaussian law") {
  const CoefficientSpec spec = make_spec("poly(1)", "poly()");
  const std::int64_t n = 200000;
  const PathEnsemble ens = simulate_euler(spec, SimGrid{0.0, 1.0, 256}, n, 11);
  const MeanSE m = mean_se(ens.x_terminal);
  CHECK(std::abs(m.mean) <= 4.0 * m.se);
  const double var = sample_variance(ens.x_terminal);
  const double var_se = var * std::sqrt(2.0 / static_cast<double>(n));
  CHECK(std::abs(var - 1.0) <= 4.0 * var_se);
}

TEST_CASE("Ornstein-Uhlenbeck terminal variance") {
  const CoefficientSpec spec = make_spec("poly(1)", "poly(0,-1)", 4.0, 0.0,
                                         0.0, 0.5, 7.0);
  const std::int64_t n = 200000;
  const SimGrid grid{0.0, 1.0, 1024};
  const PathEnsemble ens = simulate_euler(spec, grid, n, 12);
  const double var = sample_variance(ens.x_terminal);
  const double target = 0.43233235838169365;
  const double var_se = var * std::sqrt(2.0 / static_cast<double>(n));
  CHECK(std::abs(var - target) <= 4.0 * var_se + 2.0 * target * grid.dt());
}

TEST_CASE("ensembles are bitwise identical across worker counts") {
  const CoefficientSpec spec = make_spec("poly(2) + sin(1,1,0)",
                                         "abspow(1,0,0.5)", 0.5, 0.0, 0.0, 0.5,
                                         5.5, 0.9);
  set_workers(1);
  const PathEnsemble a = simulate_euler(spec, SimGrid{0.0, 1.0, 128}, 9000, 77);
  set_workers(4);
  const PathEnsemble b = simulate_euler(spec, SimGrid{0.0, 1.0, 128}, 9000, 77);
  set_workers(2);
  REQUIRE(a.x_terminal.size() == b.x_terminal.size());
  for (std::size_t i = 0; i < a.x_terminal.size(); ++i)
    CHECK(a.x_terminal[i] == b.x_terminal[i]);
}

TEST_CASE("nan divergence is reported with the path index") {
  CoefficientSpec spec = make_spec("poly(1)", "poly(1e300,1e300)");
  CHECK_THROWS_AS(simulate_euler(spec, SimGrid{0.0, 1.0, 8}, 4, 1),
                  NanDivergenceError);
}

TEST_CASE("localized path with constant coefficients is the shifted noise") {
  const CoefficientSpec spec = make_spec("poly(1)", "poly()");
  const TruncatedCoeffs tc(spec);
  const SimGrid grid{0.9, 1.0, 16};
  std::vector<double> inc(16);
  double acc = 0.0;
  for (int k = 0; k < 16; ++k)
    inc[k] = 0.01 * (k % 5) - 0.02;
  const std::vector<double> path =
      simulate_localized(tc, 0.9, 0.4, grid, inc, true);
  for (int k = 0; k <= 16; ++k) {
    CHECK(path[k] == doctest::Approx(0.4 + acc).epsilon(1e-15));
    if (k < 16) acc += inc[k];
  }
}

TEST_CASE("coupling: the localized path equals X inside the 4-eps ball") {
  // x0 = y0, small window, sigma constant: coefficients agree on the ball, so
  // the restarted path must track X node for node while X stays inside.
  const CoefficientSpec spec = make_spec("poly(1)", "abspow(1,0,0.5)", 0.5);
  const TruncatedCoeffs tc(spec);
  SimulateOptions opts;
  opts.delta = 0.125;
  opts.store_window = true;
  const SimGrid grid{0.0, 1.0, 256};
  PathEnsemble ens = simulate_euler(spec, grid, 500, 5, opts);
  classify_events(ens, tc);
  const std::int64_t wsteps = ens.window_steps();
  int coupled_paths = 0;
  for (std::int64_t p = 0; p < ens.n_paths; ++p) {
    if (ens.nu[p] != grid.time(ens.window_start)) continue;
    // Walk the stored window; while X stays inside the 4-eps ball the
    // re-simulated localized path must match exactly.
    const double* xw = &ens.x_window[p * (wsteps + 1)];
    const double* dw = &ens.dw_window[p * wsteps];
    double xbar = xw[0];
    bool inside = true;
    for (std::int64_t k = 0; k < wsteps && inside; ++k) {
      xbar += tc.sigma_bar(xbar) * dw[k] + tc.b_bar(xbar) * grid.dt();
      inside = std::abs(xw[k + 1]) <= 4.0 * spec.eps;
      if (inside) CHECK(xbar == xw[k + 1]);
    }
    ++coupled_paths;
  }
  CHECK(coupled_paths > 100);
}

TEST_CASE("stopping times on constant paths") {
  const CoefficientSpec spec = make_spec("poly(1)", "poly()", 1.0);
  const SimGrid grid{0.0, 1.0, 100};
  const double delta = 0.25;
  std::vector<double> at_center(101, 0.0);
  const StoppingTimes st1 = stopping_times(at_center, grid, 1.0, delta, spec);
  CHECK(st1.nu == doctest::Approx(0.75));
  CHECK(st1.tau == kInf);
  std::vector<double> far(101, 10.0);
  const StoppingTimes st2 = stopping_times(far, grid, 1.0, delta, spec);
  CHECK(st2.nu == kInf);
  CHECK(st2.tau == kInf);
}

TEST_CASE("stopping time under grid refinement moves at most one coarse step") {
  // Deterministic drift-dominated crossing: sigma = 0, b = -x pulls the path
  // from 6 into the 3-ball near t = ln 2, inside the window [0.5, 1].
  CoefficientSpec spec = make_spec("poly()", "poly(0,-1)", 1.0, 0.0, 6.0);
  auto nu_at = [&](std::int64_t n_steps) {
    const SimGrid grid{0.0, 1.0, n_steps};
    const SimulateOptions opts{0.5, false, true};
    const PathEnsemble ens = simulate_euler(spec, grid, 1, 1, opts);
    std::span<const double> path(&ens.x_full[0],
                                 static_cast<std::size_t>(n_steps + 1));
    return stopping_times(path, grid, 1.0, 0.5, spec).nu;
  };
  const double coarse = nu_at(128);
  const double fine = nu_at(256);
  CHECK(std::isfinite(coarse));
  CHECK(std::isfinite(fine));
  CHECK(std::abs(coarse - fine) <= 1.0 / 128.0 + 1e-12);
}

TEST_CASE("classification of degenerate ensembles") {
  SimulateOptions opts;
  opts.delta = 0.25;
  {
    const CoefficientSpec spec = make_spec("poly()", "poly()", 1.0, 0.0, 0.0);
    const TruncatedCoeffs tc(spec);
    PathEnsemble ens =
        simulate_euler(spec, SimGrid{0.0, 1.0, 64}, 50, 2, opts);
    const EventSummary ev = classify_events(ens, tc);
    CHECK(ev.n_phi_positive == 50);
    CHECK(ev.n_A == 50);
    CHECK(ev.n_C == 0);
    for (auto l : ens.labels) CHECK(l == EventLabel::A);
  }
  {
    const CoefficientSpec spec = make_spec("poly()", "poly()", 1.0, 0.0, 10.0);
    const TruncatedCoeffs tc(spec);
    PathEnsemble ens =
        simulate_euler(spec, SimGrid{0.0, 1.0, 64}, 50, 2, opts);
    const EventSummary ev = classify_events(ens, tc);
    CHECK(ev.n_phi_positive == 0);
    for (auto l : ens.labels) CHECK(l == EventLabel::neither);
  }
}

TEST_CASE("escape events are vanishingly rare for a tight window") {
  const CoefficientSpec spec = make_spec("poly(1)", "poly()", 1.0);
  const TruncatedCoeffs tc(spec);
  SimulateOptions opts;
  opts.delta = 0.0078125;  // 2^-7, sub-Gaussian tail ~ 4 exp(-64)
  PathEnsemble ens =
      simulate_euler(spec, SimGrid{0.0, 1.0, 1024}, 20000, 9, opts);
  const EventSummary ev = classify_events(ens, tc);
  CHECK(ev.n_C == 0);
  CHECK(static_cast<double>(ev.n_C) / 20000.0 < 1e-4);
  CHECK(ev.n_exceptions == 0);
}

TEST_CASE("labels A and C are disjoint by construction") {
  const CoefficientSpec spec = make_spec("poly(1)", "abspow(1,0,0.5)", 0.5);
  const TruncatedCoeffs tc(spec);
  SimulateOptions opts;
  opts.delta = 0.125;
  PathEnsemble ens =
      simulate_euler(spec, SimGrid{0.0, 1.0, 256}, 30000, 21, opts);
  const EventSummary ev = classify_events(ens, tc);
  CHECK(ev.n_A + ev.n_C + ev.n_exceptions == ev.n_phi_positive);
  CHECK(ev.exception_fraction <= 1e-3);
  CHECK(ev.n_C > 0);  // eps = 0.5 windows do see escapes at this delta
}

TEST_CASE("localized sup-increment second moment scales linearly in delta") {
  // E[sup_{s<=delta} |Xbar - start|^2] ~ delta for bounded coefficients; the
  // log-log slope over a 1.5-decade ladder must be at least one.
  const CoefficientSpec spec = make_spec("poly(1)", "abspow(1,0,0.5)", 0.5);
  const TruncatedCoeffs tc(spec);
  std::vector<double> lx, ly;
  for (double delta : {1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256,
                       1.0 / 512}) {
    WindowConfig wc;
    wc.t = 1.0;
    wc.delta = delta;
    wc.window_steps = 64;
    wc.n_paths = 20000;
    wc.seed = 55;
    wc.driftless = false;
    wc.fixed_start = 0.0;
    const WindowEnsemble we = simulate_window(spec, tc, wc);
    double acc = 0.0;
    for (std::int64_t p = 0; p < we.n_paths; ++p) {
      double sup = 0.0;
      for (std::int64_t k = 1; k <= 64; ++k)
        sup = std::max(sup, std::abs(we.x_at(p, k) - we.x_start[p]));
      acc += sup * sup;
    }
    lx.push_back(std::log(delta));
    ly.push_back(std::log(acc / static_cast<double>(we.n_paths)));
  }
  const LinearFit fit = linear_fit(lx, ly);
  CHECK(fit.slope >= 0.95);
  CHECK(fit.slope <= 1.3);
}

TEST_CASE("decomposition violations beyond the threshold throw") {
  // Coarse grid, tight window: a handful of paths jump deep into the 3-ball
  // in one step and then neither qualify as A nor move a full eps. With the
  // default 0.1% threshold the run passes; with a zero-tolerance threshold
  // the same ensemble trips the error.
  const CoefficientSpec spec = make_spec("poly(1)", "abspow(1,0,0.5)", 0.5);
  const TruncatedCoeffs tc(spec);
  SimulateOptions opts;
  opts.delta = 0.25;
  PathEnsemble ens =
      simulate_euler(spec, SimGrid{0.0, 1.0, 64}, 40000, 4242, opts);
  const EventSummary ev = classify_events(ens, tc);
  INFO("exceptions = ", ev.n_exceptions, " of ", ev.n_phi_positive);
  CHECK(ev.n_exceptions > 0);
  CHECK(ev.exception_fraction <= 1e-3);
  PathEnsemble ens2 =
      simulate_euler(spec, SimGrid{0.0, 1.0, 64}, 40000, 4242, opts);
  CHECK_THROWS_AS(classify_events(ens2, tc, 0.0, 0.0),
                  DecompositionViolation);
}

TEST_CASE("event rate: sub-Gaussian oracle dominates for constant sigma") {
  const CoefficientSpec spec = make_spec("poly(1)", "poly()", 0.5);
  const TruncatedCoeffs tc(spec);
  const std::vector<double> deltas{0.5, 0.25, 0.125, 0.0625};
  const EventRateReport rep =
      estimate_event_rate(spec, tc, 1.0, deltas, 40000, 31, 1024);
  for (const auto& pt : rep.points) {
    CHECK(pt.probability <= pt.oracle);
    CHECK(pt.n_localized > 0);
  }
  for (std::size_t i = 1; i < rep.points.size(); ++i)
    CHECK(rep.points[i].ci_lo <= rep.points[i - 1].ci_hi);
  CHECK(!rep.insufficient_hits);
  CHECK(rep.slope > 0.0);
}

TEST_CASE("pure drift: no escapes once delta is below eps over the bound") {
  // sigma = 0 (bypasses validation on purpose), b = 1: the localized path
  // moves exactly delta, so the eps = 0.5 event is impossible for delta < 0.5
  // and certain for delta > 0.5.
  CoefficientSpec spec = make_spec("poly()", "poly(1)", 0.5, 0.0, 0.0);
  const TruncatedCoeffs tc(spec);
  const std::vector<double> deltas{0.75, 0.4375, 0.25};
  const EventRateReport rep =
      estimate_event_rate(spec, tc, 1.0, deltas, 200, 3, 256);
  CHECK(rep.points[0].probability == doctest::Approx(1.0));
  CHECK(rep.points[1].probability == 0.0);
  CHECK(rep.points[2].probability == 0.0);
}

TEST_CASE("event rate requires at least three deltas") {
  const CoefficientSpec spec = make_spec("poly(1)", "poly()", 0.5);
  const TruncatedCoeffs tc(spec);
  const std::vector<double> two{0.5, 0.25};
  CHECK_THROWS_AS(estimate_event_rate(spec, tc, 1.0, two, 100, 1, 64),
                  std::invalid_argument);
}

TEST_CASE("window ensemble continues the path's stream and couples states") {
  const CoefficientSpec spec = make_spec("poly(1)", "poly()");
  const TruncatedCoeffs tc(spec);
  WindowConfig wc;
  wc.t = 1.0;
  wc.delta = 0.25;
  wc.window_steps = 32;
  wc.pre_steps = 64;
  wc.n_paths = 10;
  wc.seed = 123;
  wc.driftless = true;
  const WindowEnsemble we = simulate_window(spec, tc, wc);
  // Unit sigma and zero drift: the window path is start + running noise sum.
  for (std::int64_t p = 0; p < we.n_paths; ++p) {
    double acc = we.x_start[p];
    for (std::int64_t k = 0; k < 32; ++k) {
      acc += we.dw_at(p, k);
      CHECK(we.x_at(p, k + 1) == doctest::Approx(acc).epsilon(1e-15));
    }
    // Window increments continue the same counter stream.
    const double expected =
        std::sqrt(we.window.dt()) * normal_draw(123, p, 64);
    CHECK(we.dw_at(p, 0) == expected);
  }
}

TEST_CASE("ensemble round-trips through the binary format") {
  const CoefficientSpec spec = make_spec("poly(1)", "poly()", 0.5);
  const TruncatedCoeffs tc(spec);
  SimulateOptions opts;
  opts.delta = 0.125;
  opts.store_window = true;
  PathEnsemble ens =
      simulate_euler(spec, SimGrid{0.0, 1.0, 64}, 100, 8, opts);
  classify_events(ens, tc);
  const std::string path =
      (std::filesystem::temp_directory_path() / "sdelab_ens_test.bin").string();
  std::vector<std::pair<std::string, std::vector<double>>> extra{
      {"weight", std::vector<double>(100, 1.5)}};
  save_ensemble(ens, path, 0xabcdefULL, extra);
  const LoadedEnsemble loaded = load_ensemble(path);
  CHECK(loaded.spec_digest == 0xabcdefULL);
  CHECK(loaded.ensemble.n_paths == ens.n_paths);
  CHECK(loaded.ensemble.seed == ens.seed);
  CHECK(loaded.ensemble.x_terminal == ens.x_terminal);
  CHECK(loaded.ensemble.x_window == ens.x_window);
  CHECK(loaded.ensemble.dw_window == ens.dw_window);
  CHECK(loaded.ensemble.nu == ens.nu);
  CHECK(loaded.ensemble.tau == ens.tau);
  REQUIRE(loaded.extra_columns.size() == 1);
  CHECK(loaded.extra_columns[0].first == "weight");
  CHECK(loaded.extra_columns[0].second == extra[0].second);
  std::filesystem::remove(path);
}

TEST_CASE("terminal mean refinement has first-order bias decay") {
  // sigma = 0 keeps the mean exact per level: X_t = (1 - dt)^n x0 for the
  // linear drift, so the defect against e^{-1} scales like dt.
  CoefficientSpec spec = make_spec("poly()", "poly(0,-1)", 1.0, 0.0, 1.0);
  std::vector<double> lx, ly;
  for (std::int64_t n : {128, 256, 512, 1024}) {
    const PathEnsemble ens = simulate_euler(spec, SimGrid{0.0, 1.0, n}, 1, 1);
    const double err = std::abs(ens.x_terminal[0] - std::exp(-1.0));
    lx.push_back(std::log(1.0 / static_cast<double>(n)));
    ly.push_back(std::log(err));
  }
  const LinearFit fit = linear_fit(lx, ly);
  CHECK(fit.slope == doctest::Approx(1.0).epsilon(0.05));
}
