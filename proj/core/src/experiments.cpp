#include "sdelab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sdelab/charfn.hpp"
#include "sdelab/csvio.hpp"
#include "sdelab/density.hpp"
#include "sdelab/errors.hpp"
#include "sdelab/girsanov.hpp"
#include "sdelab/malliavin.hpp"
#include "sdelab/numeric.hpp"
#include "sdelab/parallel.hpp"
#include "sdelab/sde.hpp"
#include "sdelab/version.hpp"

namespace sdelab {

namespace {

using nlohmann::json;

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string note;
};

struct RunContext {
  Scenario scenario;
  std::string outdir;
  std::uint64_t seed = 1;
  bool svg = true;
  std::vector<Check> checks;
  std::vector<std::string> outputs;
  json summary;

  std::string path(const std::string& file) const {
    return (std::filesystem::path(outdir) / file).string();
  }
  void add_output(const std::string& file) { outputs.push_back(file); }
  void check(const std::string& name, bool pass, double value,
             double threshold, const std::string& note = "") {
    checks.push_back(Check{name, pass, value, threshold, note});
  }
};

json check_to_json(const Check& c) {
  return json{{"name", c.name},
              {"pass", c.pass},
              {"value", c.value},
              {"threshold", c.threshold},
              {"note", c.note}};
}

void require_known_keys(const Config& cfg, const std::string& section,
                        const std::set<std::string>& allowed) {
  for (const auto& k : cfg.keys(section))
    if (!allowed.count(k))
      throw ConfigError("unknown config key [" + section + "] " + k);
}

std::vector<double> geometric_thetas(double lo, double hi,
                                     int points_per_decade) {
  std::vector<double> out;
  const double step = std::pow(10.0, 1.0 / points_per_decade);
  for (double th = lo; th <= hi * (1.0 + 1e-12); th *= step)
    out.push_back(th);
  if (out.empty() || out.back() < hi * (1.0 - 1e-9)) out.push_back(hi);
  return out;
}

std::vector<double> linear_grid(double lo, double hi, int n) {
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i)
    out[i] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  return out;
}

constexpr double kDefaultDeltaLadder[] = {1.0 / 16,  1.0 / 32,  1.0 / 64,
                                          1.0 / 128, 1.0 / 256, 1.0 / 512};

// ---------------------------------------------------------------------------
// E1: decay of the localized characteristic function, beta window, bound
// term rates under the delta(theta) schedule, goal criterion.
// ---------------------------------------------------------------------------
void run_e1(const Config& cfg, RunContext& ctx) {
  const CoefficientSpec& spec = ctx.scenario.spec;
  const TruncatedCoeffs tc = build_truncated(spec);

  const std::int64_t n_paths = cfg.integer_or("experiment", "n_paths", 200000);
  const std::int64_t n_steps = cfg.integer_or("experiment", "n_steps", 1024);
  const double theta_max = cfg.num_or("experiment", "theta_max", 8.0);
  const int ppd = static_cast<int>(
      cfg.integer_or("experiment", "points_per_decade", 32));

  const SimGrid grid{0.0, spec.t, n_steps};
  const PathEnsemble ens = simulate_euler(spec, grid, n_paths, ctx.seed);

  std::vector<double> thetas{0.0};
  for (double th : geometric_thetas(1.0, theta_max, ppd)) thetas.push_back(th);
  const CharFnTable table = localized_charfn(
      ens.x_terminal, thetas, spec.y0, spec.eps, 0.0, spec.t);

  {
    CsvColumn c_theta{"theta", table.thetas};
    CsvColumn c_re{"re", table.re};
    CsvColumn c_im{"im", table.im};
    CsvColumn c_se{"se", table.se};
    CsvColumn c_n{"n_paths",
                  std::vector<double>(table.thetas.size(),
                                      static_cast<double>(table.n_paths))};
    const std::vector<CsvColumn> cols{c_theta, c_re, c_im, c_se, c_n};
    write_csv(ctx.path("cf.csv"), cols);
    ctx.add_output("cf.csv");
  }

  ctx.summary["m0"] = table.re[0];

  bool fit_ok = true;
  DecayFit fit;
  try {
    fit = fit_decay(table);
    ctx.summary["fit"] = {{"c_hat", fit.c_hat},
                          {"gamma_hat", fit.gamma_hat},
                          {"gamma_ci", {fit.ci_gamma.lo, fit.ci_gamma.hi}},
                          {"theta_range", {fit.theta_lo, fit.theta_hi}},
                          {"n_points", fit.n_points},
                          {"power_law_plausible", fit.power_law_plausible},
                          {"curvature", fit.curvature},
                          {"curvature_se", fit.curvature_se}};
  } catch (const InsufficientSignal& e) {
    fit_ok = false;
    ctx.summary["fit"] = {{"insufficient_signal", true},
                          {"noise_floor", e.noise_floor()},
                          {"max_usable_theta", e.max_usable_theta()}};
  }

  const double gamma_cfg = cfg.num_or("experiment", "goal_gamma", 0.0);
  const double c_cfg = cfg.num_or("experiment", "goal_c", 0.0);
  const double gamma_used =
      gamma_cfg > 0.0 ? gamma_cfg : (fit_ok ? fit.gamma_hat : 0.0);
  // The least-squares constant is a regression line, not an upper envelope;
  // when no constant is configured, witness the decay inequality with the
  // smallest C that covers every admissible point at the fitted exponent.
  double c_env = 0.0;
  if (fit_ok && gamma_used > 0.0) {
    for (std::size_t k = 0; k < table.thetas.size(); ++k) {
      const double th = table.thetas[k];
      if (th < 1.0) continue;
      const double mod = table.modulus(k);
      if (mod < 3.0 * table.se[k] || mod < 3.0 * table.noise_floor()) continue;
      c_env = std::max(c_env, mod * std::pow(th, 1.0 + gamma_used));
    }
  }
  const double c_used = c_cfg > 0.0 ? c_cfg : c_env;

  const BetaWindow bw = beta_window(spec.alpha, std::max(gamma_used, 0.0));
  ctx.summary["beta_window"] = {
      {"lo", bw.lo}, {"hi", bw.hi}, {"empty", bw.empty}};

  double beta = cfg.num_or("experiment", "beta", 0.0);
  if (!(beta > 0.0)) beta = bw.empty ? 1.9 : 0.5 * (bw.lo + bw.hi);
  ctx.summary["beta_used"] = beta;

  // Bound terms along delta(theta) = |theta|^{-beta}.
  BoundParams bp;
  bp.n = static_cast<int>(cfg.integer_or("experiment", "bound_n", 1));
  bp.n2 = static_cast<int>(cfg.integer_or("experiment", "bound_n2", 2));
  const double delta_cap = 0.99 * std::min(spec.t, 1.0);
  bp.c_alpha = compute_C_alpha(tc, delta_cap, spec.alpha).value;

  std::vector<double> r_theta, r_delta, r_loc_sigma, r_loc_drift, r_ibp,
      r_girsanov, r_drift_ibp, r_total;
  for (double th : table.thetas) {
    if (!(th > std::pow(std::min(spec.t, 1.0), -1.0 / beta))) continue;
    const double delta = delta_schedule(th, beta, spec.t);
    const Est7Terms terms = est7_bound(bp, th, delta, tc);
    r_theta.push_back(th);
    r_delta.push_back(delta);
    r_loc_sigma.push_back(terms.loc_sigma);
    r_loc_drift.push_back(terms.loc_drift);
    r_ibp.push_back(terms.ibp);
    r_girsanov.push_back(terms.girsanov);
    r_drift_ibp.push_back(terms.drift_ibp);
    r_total.push_back(terms.total);
  }
  if (r_theta.size() >= 4) {
    const std::vector<CsvColumn> cols{
        {"theta", r_theta},         {"delta", r_delta},
        {"loc_sigma", r_loc_sigma}, {"loc_drift", r_loc_drift},
        {"ibp", r_ibp},             {"girsanov", r_girsanov},
        {"drift_ibp", r_drift_ibp}, {"total", r_total}};
    write_csv(ctx.path("rates.csv"), cols);
    ctx.add_output("rates.csv");

    // The term exponents in theta must match the schedule arithmetic.
    auto slope_of = [&](const std::vector<double>& vals) {
      std::vector<double> lx, ly;
      for (std::size_t i = 0; i < r_theta.size(); ++i) {
        if (vals[i] <= 0.0) continue;
        lx.push_back(std::log(r_theta[i]));
        ly.push_back(std::log(vals[i]));
      }
      return lx.size() >= 2 ? linear_fit(lx, ly).slope : 0.0;
    };
    struct Expected {
      const char* name;
      const std::vector<double>* vals;
      double exponent;
    };
    const double a = spec.alpha;
    const Expected expected[] = {
        {"loc_sigma", &r_loc_sigma, -bp.n * beta},
        {"loc_drift", &r_loc_drift, -2.0 * bp.n * beta},
        {"ibp", &r_ibp, -(2.0 - beta) * bp.n2 / 2.0},
        {"girsanov", &r_girsanov, -(1.0 + a) * beta / 2.0},
    };
    for (const auto& e : expected) {
      bool relevant = true;
      for (double v : *e.vals)
        if (!(v > 0.0)) relevant = false;
      if (!relevant) continue;  // e.g. drift-free scenario kills loc_drift
      const double s = slope_of(*e.vals);
      ctx.check(std::string("e1.term_exponent.") + e.name,
                std::abs(s - e.exponent) < 1e-6, s, e.exponent);
    }
  }

  // A fitted (C, gamma) pair only means something when the data looks like a
  // power law; on curved decay (e.g. Gaussian) the check runs only with
  // explicitly configured constants.
  const bool goal_configured = c_cfg > 0.0 && gamma_cfg > 0.0;
  const bool goal_fitted = fit_ok && fit.power_law_plausible &&
                           gamma_used > 0.0 && c_used > 0.0;
  if (goal_configured || goal_fitted) {
    const GoalReport goal = check_goal_criterion(table, c_used, gamma_used);
    ctx.check("e1.goal_criterion", goal.pass,
              goal.pass ? 0.0 : goal.first_violation_theta, 0.0,
              goal.c_exceeds_cap ? "C exceeds plausibility cap" : "");
    ctx.summary["goal"] = {{"c", c_used},
                           {"gamma", gamma_used},
                           {"c_is_envelope", !(c_cfg > 0.0)},
                           {"pass", goal.pass},
                           {"c_exceeds_cap", goal.c_exceeds_cap}};
  } else {
    ctx.summary["goal"] = {{"skipped", true},
                           {"reason", "no power-law fit and no configured "
                                      "(C, gamma)"}};
  }

  if (ctx.svg) {
    std::vector<SvgSeries> series(2);
    series[0].name = "|cf|";
    for (std::size_t k = 0; k < table.thetas.size(); ++k) {
      if (table.thetas[k] < 1.0) continue;
      series[0].xs.push_back(table.thetas[k]);
      series[0].ys.push_back(std::max(table.modulus(k), 1e-12));
    }
    series[1].name = "noise floor";
    series[1].xs = {1.0, theta_max};
    series[1].ys = {table.noise_floor(), table.noise_floor()};
    write_svg_chart(ctx.path("cf.svg"), "localized characteristic function",
                    series, true, true);
    ctx.add_output("cf.svg");
  }
}

// ---------------------------------------------------------------------------
// E2: Levy inversion against closed-form and KDE oracles.
// ---------------------------------------------------------------------------
void run_e2(const Config& cfg, RunContext& ctx) {
  const CoefficientSpec& spec = ctx.scenario.spec;
  build_truncated(spec);  // assumption gate

  const std::int64_t n_paths = cfg.integer_or("experiment", "n_paths", 1000000);
  const std::int64_t n_steps = cfg.integer_or("experiment", "n_steps", 1024);
  const double cutoff = cfg.num_or("experiment", "cutoff", 8.0);
  const int grid_points =
      static_cast<int>(cfg.integer_or("experiment", "grid_points", 129));
  const int n_theta =
      static_cast<int>(cfg.integer_or("experiment", "theta_points", 257));
  const double kde_bw = cfg.num_or("experiment", "kde_bandwidth", 0.05);
  const double tol_center = cfg.num_or("experiment", "tol_at_center", 1e-2);
  const double tol_sup = cfg.num_or("experiment", "tol_sup", 1e-2);
  const double tol_kde = cfg.num_or("experiment", "tol_kde", 2e-2);

  const SimGrid grid{0.0, spec.t, n_steps};
  const PathEnsemble ens = simulate_euler(spec, grid, n_paths, ctx.seed);

  const std::vector<double> thetas = linear_grid(0.0, cutoff, n_theta);
  const CharFnTable table = localized_charfn(
      ens.x_terminal, thetas, spec.y0, spec.eps, 0.0, spec.t);
  const double m0 = table.re[0];
  ctx.summary["m0"] = m0;

  const std::vector<double> xs =
      linear_grid(spec.y0 - spec.eps, spec.y0 + spec.eps, grid_points);

  // Normalized localized law, inverted, then scaled back by m0.
  CharFnTable normalized = table;
  if (m0 > 0.0) {
    for (std::size_t k = 0; k < normalized.re.size(); ++k) {
      normalized.re[k] /= m0;
      normalized.im[k] /= m0;
      normalized.se[k] /= m0;
    }
  }
  const DensityProfile tilde = levy_invert(normalized, xs, cutoff);
  const DensityProfile prof = local_density(m0, tilde);
  const DensityProfile direct = levy_invert(table, xs, cutoff);

  double scale_gap = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j)
    scale_gap = std::max(scale_gap,
                         std::abs(prof.values[j] - direct.values[j]));
  ctx.check("e2.lemma1_scaling_consistency", scale_gap <= 1e-12, scale_gap,
            1e-12);

  {
    const std::vector<CsvColumn> cols{{"x", prof.xs}, {"value", prof.values}};
    write_csv(ctx.path("density.csv"), cols);
    ctx.add_output("density.csv");
    json sidecar{{"theta_cutoff", prof.theta_cutoff},
                 {"quadrature_error", prof.budget.quadrature},
                 {"tail_error", prof.budget.tail},
                 {"tail_modeled", prof.budget.tail_modeled},
                 {"mc_error", prof.budget.mc},
                 {"total_error", prof.budget.total()},
                 {"imag_residue", prof.imag_residue},
                 {"m0", m0}};
    std::ofstream side(ctx.path("density.json"));
    side << sidecar.dump(2) << "\n";
    ctx.add_output("density.json");
  }

  const DensityProfile kde = kde_oracle(ens.x_terminal, kde_bw, xs);
  double kde_gap = 0.0;
  for (std::size_t j = 0; j < xs.size(); ++j)
    kde_gap = std::max(kde_gap, std::abs(prof.values[j] - kde.values[j]));
  ctx.check("e2.kde_cross_check", kde_gap <= tol_kde, kde_gap, tol_kde);

  if (ctx.scenario.oracle.has_closed_form()) {
    double sup_err = 0.0;
    for (std::size_t j = 0; j < xs.size(); ++j)
      sup_err = std::max(sup_err,
                         std::abs(prof.values[j] -
                                  ctx.scenario.oracle.density(spec, xs[j])));
    double center = 0.0, imag = 0.0;
    (void)imag;
    // value at y0 from the profile grid (y0 is a node: odd grid count).
    center = prof.values[(xs.size() - 1) / 2];
    const double center_err =
        std::abs(center - ctx.scenario.oracle.density(spec, spec.y0));
    ctx.check("e2.density_at_center", center_err <= tol_center, center_err,
              tol_center);
    ctx.check("e2.density_sup_error", sup_err <= tol_sup, sup_err, tol_sup);
    ctx.summary["oracle_sup_error"] = sup_err;
    ctx.summary["oracle_center_error"] = center_err;

    const MeanSE mean = mean_se(ens.x_terminal);
    const double var = sample_variance(ens.x_terminal);
    const double var_true = ctx.scenario.oracle.variance(spec);
    const double var_se = var * std::sqrt(2.0 / static_cast<double>(n_paths));
    const double var_tol = 4.0 * var_se + 2.0 * var_true * grid.dt();
    ctx.check("e2.terminal_variance", std::abs(var - var_true) <= var_tol,
              std::abs(var - var_true), var_tol);
    ctx.summary["terminal_mean"] = mean.mean;
    ctx.summary["terminal_variance"] = var;
  }

  if (ctx.svg) {
    std::vector<SvgSeries> series;
    series.push_back({"inverted", prof.xs, prof.values});
    series.push_back({"kde", kde.xs, kde.values});
    if (ctx.scenario.oracle.has_closed_form()) {
      SvgSeries oracle{"oracle", prof.xs, {}};
      for (double x : prof.xs)
        oracle.ys.push_back(ctx.scenario.oracle.density(spec, x));
      series.push_back(std::move(oracle));
    }
    write_svg_chart(ctx.path("density.svg"), "local density", series, false,
                    false);
    ctx.add_output("density.svg");
  }
}

// ---------------------------------------------------------------------------
// E3: exponential-martingale weights: mean one, moment bounds, reweighting.
// ---------------------------------------------------------------------------
void run_e3(const Config& cfg, RunContext& ctx) {
  const CoefficientSpec& spec = ctx.scenario.spec;
  const TruncatedCoeffs tc = build_truncated(spec);

  const std::int64_t n_paths = cfg.integer_or("experiment", "n_paths", 200000);
  const std::int64_t window_steps =
      cfg.integer_or("experiment", "window_steps", 128);
  const std::int64_t pre_steps = cfg.integer_or("experiment", "pre_steps", 256);
  const std::vector<double> deltas =
      cfg.array_or("experiment", "deltas", {0.01, 0.04, 0.16});

  std::vector<double> r_delta, r_mean, r_mean_se, r_e2, r_bound2, r_e4,
      r_bound4, r_gap, r_weak_gap;
  bool all_pass = true;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    WindowConfig wc;
    wc.t = spec.t;
    wc.delta = deltas[i];
    wc.window_steps = window_steps;
    wc.pre_steps = pre_steps;
    wc.n_paths = n_paths;
    wc.seed = ctx.seed + i;
    wc.driftless = true;
    const WindowEnsemble we = simulate_window(spec, tc, wc);
    const GirsanovWeights w = girsanov_weight(we, tc);

    const MeanSE zm = mean_se(w.z);
    ctx.check("e3.martingale_mean.delta=" + format_double(deltas[i]),
              std::abs(zm.mean - 1.0) <= 4.0 * zm.se, std::abs(zm.mean - 1.0),
              4.0 * zm.se);

    const MomentBoundReport m2 = moment_bound_check(w, 2.0);
    const MomentBoundReport m4 = moment_bound_check(w, 4.0);
    ctx.check("e3.moment_bound.p2.delta=" + format_double(deltas[i]), m2.pass,
              m2.ci.hi, m2.bound * 1.02);
    ctx.check("e3.moment_bound.p4.delta=" + format_double(deltas[i]), m4.pass,
              m4.ci.hi, m4.bound * 1.02);
    all_pass = all_pass && m2.pass && m4.pass;

    r_delta.push_back(deltas[i]);
    r_mean.push_back(zm.mean);
    r_mean_se.push_back(zm.se);
    r_e2.push_back(m2.empirical);
    r_bound2.push_back(m2.bound);
    r_e4.push_back(m4.empirical);
    r_bound4.push_back(m4.bound);
    r_gap.push_back(w.mean_abs_rel_gap);
    r_weak_gap.push_back(w.weak_gap);
  }

  // Reweighting cross-check on the first delta: driftless simulation times Z
  // against a direct drifted simulation of the same localized SDE.
  {
    const double delta = deltas.front();
    WindowConfig wc;
    wc.t = spec.t;
    wc.delta = delta;
    wc.window_steps = window_steps;
    wc.pre_steps = pre_steps;
    wc.n_paths = n_paths;
    wc.seed = ctx.seed;
    wc.driftless = true;
    const WindowEnsemble wp = simulate_window(spec, tc, wc);
    const GirsanovWeights w = girsanov_weight(wp, tc);
    wc.driftless = false;
    wc.seed = ctx.seed + 1000003;
    const WindowEnsemble wq = simulate_window(spec, tc, wc);

    const Mollifier phi(spec.eps, 1.5 * spec.eps);
    const double y0 = spec.y0;
    struct Fn {
      const char* name;
      std::function<double(double)> f;
    };
    const Fn fns[] = {{"identity", [](double x) { return x; }},
                      {"mollifier", [&phi, y0](double x) {
                         return phi.value(x - y0);
                       }}};
    for (const auto& fn : fns) {
      const MeanSE lhs = reweighted_expectation(fn.f, wp, w);
      const MeanSE rhs = mean_se_fn(wq.n_paths, [&](std::int64_t p) {
        return fn.f(wq.terminal(p));
      });
      const double se = std::sqrt(lhs.se * lhs.se + rhs.se * rhs.se);
      ctx.check(std::string("e3.reweighting.") + fn.name,
                std::abs(lhs.mean - rhs.mean) <= 4.0 * se,
                std::abs(lhs.mean - rhs.mean), 4.0 * se);
    }
  }

  const CAlphaBound ca = compute_C_alpha(tc, deltas.back(), spec.alpha);
  ctx.summary["c_alpha"] = {{"holder_branch", ca.holder_branch},
                            {"drift_branch", ca.drift_branch},
                            {"value", ca.value}};

  const std::vector<CsvColumn> cols{
      {"delta", r_delta},   {"mean_z", r_mean},     {"mean_z_se", r_mean_se},
      {"e_z2", r_e2},       {"bound_p2", r_bound2}, {"e_z4", r_e4},
      {"bound_p4", r_bound4}, {"form_gap", r_gap},  {"weak_form_gap", r_weak_gap}};
  write_csv(ctx.path("rates.csv"), cols);
  ctx.add_output("rates.csv");

  if (ctx.svg) {
    std::vector<SvgSeries> series;
    series.push_back({"E[Z^2]", r_delta, r_e2});
    series.push_back({"bound p=2", r_delta, r_bound2});
    series.push_back({"E[Z^4]", r_delta, r_e4});
    series.push_back({"bound p=4", r_delta, r_bound4});
    write_svg_chart(ctx.path("moments.svg"), "weight moments vs bound", series,
                    true, true);
    ctx.add_output("moments.svg");
  }
}

// ---------------------------------------------------------------------------
// E4: escape-event rates against the Markov-bound shape and the sub-Gaussian
// oracle, plus the A/C decomposition accounting.
// ---------------------------------------------------------------------------
void run_e4(const Config& cfg, RunContext& ctx) {
  const CoefficientSpec& spec = ctx.scenario.spec;
  const TruncatedCoeffs tc = build_truncated(spec);

  const std::int64_t n_paths = cfg.integer_or("experiment", "n_paths", 100000);
  const std::int64_t n_steps = cfg.integer_or("experiment", "n_steps", 1024);
  // Event probabilities die fast in delta; the default ladder is coarser
  // than the rate-experiment one so the counts stay nonzero.
  const std::vector<double> deltas =
      cfg.array_or("experiment", "deltas",
                   {0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625});

  const EventRateReport report = estimate_event_rate(
      spec, tc, spec.t, deltas, n_paths, ctx.seed, n_steps);

  std::vector<double> r_delta, r_p, r_lo, r_hi, r_hits, r_oracle, r_markov;
  bool oracle_dominates = true;
  bool monotone = true;
  for (std::size_t i = 0; i < report.points.size(); ++i) {
    const auto& pt = report.points[i];
    r_delta.push_back(pt.delta);
    r_p.push_back(pt.probability);
    r_lo.push_back(pt.ci_lo);
    r_hi.push_back(pt.ci_hi);
    r_hits.push_back(static_cast<double>(pt.hits));
    r_oracle.push_back(pt.oracle);
    r_markov.push_back(pt.markov_shape);
    if (pt.probability > pt.oracle) oracle_dominates = false;
    if (i > 0 && report.points[i].delta < report.points[i - 1].delta &&
        report.points[i].ci_lo > report.points[i - 1].ci_hi)
      monotone = false;
  }
  ctx.check("e4.oracle_dominates", oracle_dominates, 0.0, 0.0);
  ctx.check("e4.monotone_in_delta", monotone, 0.0, 0.0);
  ctx.summary["insufficient_hits"] = report.insufficient_hits;
  if (!report.insufficient_hits && report.slope_points >= 2) {
    ctx.summary["rate_slope"] = report.slope;
    ctx.summary["rate_slope_se"] = report.slope_se;
  }

  // Decomposition accounting at one representative delta.
  const double delta_classify =
      cfg.num_or("experiment", "delta_classify", 0.0625);
  SimulateOptions opts;
  opts.delta = delta_classify;
  PathEnsemble ens = simulate_euler(spec, SimGrid{0.0, spec.t, n_steps},
                                    n_paths, ctx.seed + 7137, opts);
  const EventSummary ev = classify_events(ens, tc);
  ctx.check("e4.decomposition_exceptions",
            ev.exception_fraction <= 1e-3, ev.exception_fraction, 1e-3);
  bool disjoint = true;
  for (std::int64_t p = 0; p < ens.n_paths; ++p) {
    // labels are single-valued by construction; this guards the invariant.
    if (ens.labels[p] != EventLabel::neither && ens.phi_at_t[p] <= 0.0)
      disjoint = false;
  }
  ctx.check("e4.labels_consistent", disjoint, 0.0, 0.0);
  ctx.summary["events"] = {{"phi_positive", ev.n_phi_positive},
                           {"A", ev.n_A},
                           {"C", ev.n_C},
                           {"exceptions", ev.n_exceptions}};

  const std::vector<CsvColumn> cols{
      {"delta", r_delta}, {"probability", r_p},   {"ci_lo", r_lo},
      {"ci_hi", r_hi},    {"hits", r_hits},       {"oracle", r_oracle},
      {"markov_shape", r_markov}};
  write_csv(ctx.path("rates.csv"), cols);
  ctx.add_output("rates.csv");
  // The sup over the window is a grid max, so tabulated probabilities are
  // lower bounds for the continuous-time event.
  ctx.summary["sup_is_grid_max"] = true;

  if (ctx.svg) {
    std::vector<SvgSeries> series;
    series.push_back({"empirical", r_delta, r_p});
    series.push_back({"oracle", r_delta, r_oracle});
    series.push_back({"markov shape", r_delta, r_markov});
    write_svg_chart(ctx.path("rates.svg"), "escape-event rate", series, true,
                    true);
    ctx.add_output("rates.svg");
  }
}

// ---------------------------------------------------------------------------
// E5: integration-by-parts sweep and weight-norm scaling.
// ---------------------------------------------------------------------------
void run_e5(const Config& cfg, RunContext& ctx) {
  const CoefficientSpec& spec = ctx.scenario.spec;
  const TruncatedCoeffs tc = build_truncated(spec);

  const std::int64_t n_paths = cfg.integer_or("experiment", "n_paths", 100000);
  const std::int64_t window_steps =
      cfg.integer_or("experiment", "window_steps", 64);
  const double delta = cfg.num_or("experiment", "delta", 0.04);
  const std::vector<double> deltas = cfg.array_or(
      "experiment", "deltas",
      std::vector<double>(std::begin(kDefaultDeltaLadder),
                          std::end(kDefaultDeltaLadder)));

  WindowConfig wc;
  wc.t = spec.t;
  wc.delta = delta;
  wc.window_steps = window_steps;
  wc.n_paths = n_paths;
  wc.seed = ctx.seed;
  wc.driftless = true;
  wc.fixed_start = spec.y0;
  const WindowEnsemble we = simulate_window(spec, tc, wc);

  bool sigma_const = true;
  for (const auto& term : spec.sigma.terms) {
    if (term.kind != FnTerm::Kind::poly) sigma_const = false;
    for (std::size_t i = 1; i < term.params.size(); ++i)
      if (term.params[i] != 0.0) sigma_const = false;
  }

  struct Combo {
    FKind f;
    GKind g;
    int order;
  };
  std::vector<Combo> combos;
  for (GKind g : {GKind::one, GKind::phi, GKind::phi_w})
    for (int order : {1, 2}) combos.push_back({FKind::w_increment, g, order});
  if (sigma_const) {
    for (GKind g : {GKind::one, GKind::phi, GKind::phi_w})
      for (int order : {1, 2}) combos.push_back({FKind::xbar_terminal, g, order});
  } else {
    combos.push_back({FKind::xbar_terminal, GKind::one, 1});
  }

  const TestFunction phi_sine = test_fn_sine(1.0);
  const TestFunction phi_quad = test_fn_quadratic();
  const TestFunction phi_bump = test_fn_bump(spec.eps, 1.5 * spec.eps);

  json reports = json::array();
  bool all_pass = true;
  auto fname = [](FKind f) {
    return f == FKind::w_increment ? "w_increment" : "xbar_terminal";
  };
  auto gname = [](GKind g) {
    switch (g) {
      case GKind::one:
        return "one";
      case GKind::phi:
        return "phi";
      case GKind::phi_w:
        return "phi_w";
    }
    return "?";
  };
  for (const auto& combo : combos) {
    std::vector<const TestFunction*> phis{&phi_sine};
    if (combo.f == FKind::w_increment && combo.g == GKind::one) {
      phis.push_back(&phi_quad);
      phis.push_back(&phi_bump);
    }
    for (const TestFunction* phi : phis) {
      const IbpReport rep =
          verify_ibp(we, tc, combo.f, combo.g, combo.order, *phi);
      all_pass = all_pass && rep.pass;
      const std::string name = std::string("e5.ibp.") + fname(combo.f) + "." +
                               gname(combo.g) + ".n" +
                               std::to_string(combo.order) + "." + phi->name;
      ctx.check(name, rep.pass, std::abs(rep.diff.mean), 4.0 * rep.diff.se);
      reports.push_back(json{{"f", fname(combo.f)},
                             {"g", gname(combo.g)},
                             {"order", combo.order},
                             {"phi", phi->name},
                             {"lhs", rep.lhs.mean},
                             {"lhs_se", rep.lhs.se},
                             {"rhs", rep.rhs.mean},
                             {"rhs_se", rep.rhs.se},
                             {"diff", rep.diff.mean},
                             {"diff_se", rep.diff.se},
                             {"hn_l2_norm", rep.hn_l2_norm},
                             {"h1_l2_norm", rep.h1_l2_norm},
                             {"delta", rep.delta},
                             {"n_paths", n_paths},
                             {"seed", ctx.seed},
                             {"pass", rep.pass}});
    }
  }

  // Weight-norm scaling.
  json scalings = json::array();
  std::vector<double> s_delta, s_norm1, s_norm2, s_norm_gen;
  {
    const NormScalingReport n1 =
        weight_norm_scaling(spec, tc, FKind::w_increment, GKind::one, 1,
                            deltas, n_paths, ctx.seed + 31, window_steps,
                            spec.t, spec.y0);
    const NormScalingReport n2 =
        weight_norm_scaling(spec, tc, FKind::w_increment, GKind::one, 2,
                            deltas, n_paths, ctx.seed + 32, window_steps,
                            spec.t, spec.y0);
    const NormScalingReport ng =
        weight_norm_scaling(spec, tc, FKind::xbar_terminal, GKind::one, 1,
                            deltas, n_paths, ctx.seed + 33, window_steps,
                            spec.t, spec.y0);
    ctx.check("e5.norm_slope.closed_n1", std::abs(n1.slope + 0.5) <= 0.1,
              n1.slope, -0.5);
    ctx.check("e5.norm_slope.closed_n2", std::abs(n2.slope + 1.0) <= 0.1,
              n2.slope, -1.0);
    const double tol_gen = sigma_const ? 0.1 : 0.15;
    ctx.check("e5.norm_slope.general_n1", std::abs(ng.slope + 0.5) <= tol_gen,
              ng.slope, -0.5);
    s_delta = n1.deltas;
    s_norm1 = n1.norms;
    s_norm2 = n2.norms;
    s_norm_gen = ng.norms;
    scalings.push_back(json{{"case", "w_increment.n1"},
                            {"slope", n1.slope},
                            {"slope_se", n1.slope_se}});
    scalings.push_back(json{{"case", "w_increment.n2"},
                            {"slope", n2.slope},
                            {"slope_se", n2.slope_se}});
    scalings.push_back(json{{"case", "xbar_terminal.n1"},
                            {"slope", ng.slope},
                            {"slope_se", ng.slope_se}});
  }

  json ibp_json{{"reports", reports},
                {"scaling", scalings},
                {"scenario", ctx.scenario.name},
                {"delta", delta},
                {"window_steps", window_steps},
                {"n_paths", n_paths},
                {"seed", ctx.seed}};
  std::ofstream out(ctx.path("ibp.json"));
  out << ibp_json.dump(2) << "\n";
  ctx.add_output("ibp.json");

  const std::vector<CsvColumn> cols{{"delta", s_delta},
                                    {"h1_norm", s_norm1},
                                    {"h2_norm", s_norm2},
                                    {"h1_norm_general", s_norm_gen}};
  write_csv(ctx.path("rates.csv"), cols);
  ctx.add_output("rates.csv");

  if (ctx.svg) {
    std::vector<SvgSeries> series;
    series.push_back({"||H1||", s_delta, s_norm1});
    series.push_back({"||H2||", s_delta, s_norm2});
    series.push_back({"||H1|| general", s_delta, s_norm_gen});
    write_svg_chart(ctx.path("scaling.svg"), "weight norm scaling", series,
                    true, true);
    ctx.add_output("scaling.svg");
  }
}

// ---------------------------------------------------------------------------
// E6: approximation rate of the measure-change integrand.
// ---------------------------------------------------------------------------
void run_e6(const Config& cfg, RunContext& ctx) {
  const CoefficientSpec& spec = ctx.scenario.spec;
  const TruncatedCoeffs tc = build_truncated(spec);

  const std::int64_t n_paths = cfg.integer_or("experiment", "n_paths", 100000);
  const std::int64_t window_steps =
      cfg.integer_or("experiment", "window_steps", 64);
  const std::int64_t pre_steps = cfg.integer_or("experiment", "pre_steps", 256);
  const std::vector<double> deltas = cfg.array_or(
      "experiment", "deltas",
      std::vector<double>(std::begin(kDefaultDeltaLadder),
                          std::end(kDefaultDeltaLadder)));
  const double slope_tol = cfg.num_or("experiment", "slope_tol", 0.15);

  std::vector<double> r_delta, r_value, r_se;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    WindowConfig wc;
    wc.t = spec.t;
    wc.delta = deltas[i];
    wc.window_steps = window_steps;
    wc.pre_steps = pre_steps;
    wc.n_paths = n_paths;
    wc.seed = ctx.seed + i;
    wc.driftless = true;
    const WindowEnsemble we = simulate_window(spec, tc, wc);
    const double dt = we.window.dt();

    // Per-path integral of |psi(Xbar_u) Z_u - psi(X_{t-delta})|^2 du with Z
    // advanced by its SDE form along the same noise.
    const MeanSE m = mean_se_fn(we.n_paths, [&](std::int64_t p) {
      const double psi0 = tc.psi(we.x_start[p]);
      double z = 1.0;
      double acc = 0.0;
      for (std::int64_t k = 0; k < window_steps; ++k) {
        const double psi = tc.psi(we.x_at(p, k));
        const double d = psi * z - psi0;
        acc += d * d * dt;
        z += z * psi * we.dw_at(p, k);
      }
      return acc;
    });
    const double value = std::sqrt(m.mean);
    r_delta.push_back(deltas[i]);
    r_value.push_back(value);
    r_se.push_back(value > 0.0 ? m.se / (2.0 * value) : 0.0);
  }

  std::vector<double> lx(r_delta.size()), ly(r_delta.size());
  for (std::size_t i = 0; i < r_delta.size(); ++i) {
    lx[i] = std::log(r_delta[i]);
    ly[i] = std::log(r_value[i]);
  }
  const LinearFit fit = linear_fit(lx, ly);
  const double expected = 0.5 * (1.0 + spec.alpha);
  ctx.check("e6.approximation_rate_slope",
            std::abs(fit.slope - expected) <= slope_tol, fit.slope, expected);
  ctx.summary["slope"] = fit.slope;
  ctx.summary["slope_se"] = fit.slope_se;
  ctx.summary["expected_slope"] = expected;

  const std::vector<CsvColumn> cols{
      {"delta", r_delta}, {"value", r_value}, {"se", r_se}};
  write_csv(ctx.path("rates.csv"), cols);
  ctx.add_output("rates.csv");

  if (ctx.svg) {
    std::vector<SvgSeries> series;
    series.push_back({"L2 approximation error", r_delta, r_value});
    SvgSeries ref{"reference slope", r_delta, {}};
    const double c0 = r_value.back() / std::pow(r_delta.back(), expected);
    for (double d : r_delta) ref.ys.push_back(c0 * std::pow(d, expected));
    series.push_back(std::move(ref));
    write_svg_chart(ctx.path("rate.svg"), "measure-change approximation rate",
                    series, true, true);
    ctx.add_output("rate.svg");
  }
}

const std::set<std::string> kExperimentKeys{
    "id",          "scenario",     "outdir",        "seed",
    "n_paths",     "n_steps",      "svg",           "theta_max",
    "points_per_decade",           "goal_c",        "goal_gamma",
    "beta",        "bound_n",      "bound_n2",      "cutoff",
    "grid_points", "theta_points", "kde_bandwidth", "tol_at_center",
    "tol_sup",     "tol_kde",      "deltas",        "window_steps",
    "pre_steps",   "delta",        "delta_classify", "slope_tol"};

const std::set<std::string> kScenarioKeys{
    "name", "sigma", "b",  "x0", "y0",          "eps",   "sigma0",
    "alpha", "holder_const", "T", "t", "oracle", "sigma_bound", "b_bound"};

const std::set<std::string> kMcKeys{"workers"};

}  // namespace

Scenario scenario_from_config(const Config& cfg, const ScenarioRegistry& reg) {
  require_known_keys(cfg, "scenario", kScenarioKeys);
  const bool inline_section = cfg.has_section("scenario");
  std::string name = cfg.str_or("experiment", "scenario", "");
  if (inline_section) name = cfg.str_or("scenario", "name", name);
  if (name.empty()) throw ConfigError("no scenario named in config");

  Scenario s;
  if (reg.contains(name)) {
    s = reg.get(name);
  } else if (!inline_section) {
    throw ConfigError("scenario not found: " + name);
  } else {
    s.name = name;
    // A new scenario must spell out its coefficients and window.
    s.spec.sigma = FnDescriptor::parse(cfg.str("scenario", "sigma"));
    s.spec.b = FnDescriptor::parse(cfg.str("scenario", "b"));
    if (!cfg.has("scenario", "eps"))
      throw ConfigError("missing config key [scenario] eps");
  }
  if (inline_section) {
    if (cfg.has("scenario", "sigma"))
      s.spec.sigma = FnDescriptor::parse(cfg.str("scenario", "sigma"));
    if (cfg.has("scenario", "b"))
      s.spec.b = FnDescriptor::parse(cfg.str("scenario", "b"));
    s.spec.x0 = cfg.num_or("scenario", "x0", s.spec.x0);
    s.spec.y0 = cfg.num_or("scenario", "y0", s.spec.y0);
    s.spec.eps = cfg.num_or("scenario", "eps", s.spec.eps);
    s.spec.sigma0 = cfg.num_or("scenario", "sigma0", s.spec.sigma0);
    s.spec.alpha = cfg.num_or("scenario", "alpha", s.spec.alpha);
    s.spec.holder_const =
        cfg.num_or("scenario", "holder_const", s.spec.holder_const);
    s.spec.T = cfg.num_or("scenario", "T", s.spec.T);
    s.spec.t = cfg.num_or("scenario", "t", s.spec.t);
    s.spec.sigma_bound = cfg.num_or("scenario", "sigma_bound", s.spec.sigma_bound);
    s.spec.b_bound = cfg.num_or("scenario", "b_bound", s.spec.b_bound);
    if (cfg.has("scenario", "oracle")) {
      const std::string o = cfg.str("scenario", "oracle");
      if (o == "none")
        s.oracle.kind = Oracle::Kind::none;
      else if (o == "brownian")
        s.oracle.kind = Oracle::Kind::brownian;
      else if (o == "ou")
        s.oracle.kind = Oracle::Kind::ornstein_uhlenbeck;
      else
        throw ConfigError("unknown oracle kind: " + o);
    }
  }
  s.spec.check_invariants();
  return s;
}

ExperimentOutcome run_experiment(const Config& cfg,
                                 const std::string& outdir_override) {
  require_known_keys(cfg, "experiment", kExperimentKeys);
  require_known_keys(cfg, "mc", kMcKeys);

  const std::string id = cfg.str("experiment", "id");
  const ScenarioRegistry reg = ScenarioRegistry::defaults();

  RunContext ctx;
  ctx.scenario = scenario_from_config(cfg, reg);
  ctx.outdir = outdir_override.empty()
                   ? cfg.str("experiment", "outdir")
                   : outdir_override;
  ctx.seed = static_cast<std::uint64_t>(cfg.integer_or("experiment", "seed", 1));
  ctx.svg = cfg.boolean_or("experiment", "svg", true);

  const std::int64_t cfg_workers = cfg.integer_or("mc", "workers", 0);
  if (cfg_workers > 0) set_workers(static_cast<int>(cfg_workers));

  std::filesystem::create_directories(ctx.outdir);

  const auto t0 = std::chrono::steady_clock::now();
  if (id == "E1")
    run_e1(cfg, ctx);
  else if (id == "E2")
    run_e2(cfg, ctx);
  else if (id == "E3")
    run_e3(cfg, ctx);
  else if (id == "E4")
    run_e4(cfg, ctx);
  else if (id == "E5")
    run_e5(cfg, ctx);
  else if (id == "E6")
    run_e6(cfg, ctx);
  else
    throw ConfigError("unknown experiment id: " + id);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  bool all_pass = true;
  json checks = json::array();
  for (const auto& c : ctx.checks) {
    checks.push_back(check_to_json(c));
    all_pass = all_pass && c.pass;
  }

  json manifest{{"experiment", id},
                {"scenario", ctx.scenario.name},
                {"scenario_echo", format_scenario(ctx.scenario)},
                {"config_text", cfg.text()},
                {"config_digest", fnv1a(cfg.text())},
                {"version", kVersion},
                {"seed", ctx.seed},
                {"workers", workers()},
                {"outputs", ctx.outputs},
                {"wall_clock_seconds", wall},
                {"checks", checks},
                {"summary", ctx.summary},
                {"all_checks_pass", all_pass}};

  ExperimentOutcome outcome;
  outcome.manifest_path = ctx.path("manifest.json");
  {
    std::ofstream out(outcome.manifest_path);
    if (!out)
      throw std::runtime_error("cannot write " + outcome.manifest_path);
    out << manifest.dump(2) << "\n";
  }
  for (const auto& f : ctx.outputs) outcome.outputs.push_back(ctx.path(f));
  outcome.outputs.push_back(outcome.manifest_path);
  outcome.exit_code = all_pass ? 0 : 2;
  return outcome;
}

ExperimentOutcome rerun_manifest(const std::string& manifest_path,
                                 const std::string& outdir_override) {
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("cannot open manifest: " + manifest_path);
  json manifest;
  in >> manifest;
  if (!manifest.contains("config_text"))
    throw ConfigError("manifest has no embedded config: " + manifest_path);
  const Config cfg = Config::parse_text(manifest["config_text"].get<std::string>());
  std::string outdir = outdir_override;
  if (outdir.empty())
    outdir = std::filesystem::path(manifest_path).parent_path().string();
  if (outdir.empty()) outdir = ".";
  return run_experiment(cfg, outdir);
}

std::string list_scenarios_text() {
  const ScenarioRegistry reg = ScenarioRegistry::defaults();
  std::ostringstream out;
  for (const auto& name : reg.names()) {
    const Scenario& s = reg.get(name);
    out << name << "\n";
    out << "  sigma = " << s.spec.sigma.format() << "\n";
    out << "  b     = " << s.spec.b.format() << "\n";
    out << "  x0=" << format_double(s.spec.x0) << " y0=" << format_double(s.spec.y0)
        << " eps=" << format_double(s.spec.eps)
        << " sigma0=" << format_double(s.spec.sigma0)
        << " alpha=" << format_double(s.spec.alpha)
        << " holder_const=" << format_double(s.spec.holder_const)
        << " t=" << format_double(s.spec.t) << "\n";
  }
  return out.str();
}

}  // namespace sdelab
