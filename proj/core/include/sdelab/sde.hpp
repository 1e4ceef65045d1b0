#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sdelab/coeffs.hpp"

namespace sdelab {

struct SimGrid {
  double t_start = 0.0;
  double t_end = 1.0;
  std::int64_t n_steps = 1;

  double dt() const { return (t_end - t_start) / static_cast<double>(n_steps); }
  double time(std::int64_t k) const {
    return t_start + static_cast<double>(k) * dt();
  }
  void check() const;
};

enum class EventLabel : std::uint8_t { neither = 0, A = 1, C = 2 };

struct SimulateOptions {
  double delta = 0.0;        // localization window length; 0 = no window
  bool store_window = false; // keep X and dB on the window nodes
  bool store_full = false;   // keep the whole trajectory (small runs)
};

// Paths of the driving SDE under Q with per-path counter-based noise streams:
// increment k of path i is a pure function of (seed, i, k) — the path index
// is the substream id — so ensembles are bitwise identical for any worker
// count. Row-major per-path storage.
struct PathEnsemble {
  SimGrid grid;
  std::int64_t n_paths = 0;
  std::uint64_t seed = 0;
  double delta = 0.0;
  std::int64_t window_start = 0;  // grid index of t - delta

  std::vector<double> x_terminal;      // X_t
  std::vector<double> x_window_start;  // X_{t-delta} (when delta > 0)

  bool has_window = false;
  std::vector<double> x_window;   // n_paths x (wsteps+1)
  std::vector<double> dw_window;  // n_paths x wsteps

  bool has_full = false;
  std::vector<double> x_full;  // n_paths x (n_steps+1)

  // Filled by classify_events. nu/tau use +infinity sentinels.
  bool has_events = false;
  std::vector<double> nu;
  std::vector<double> tau;
  std::vector<double> sup_incr;  // sup_k |Xbar(nu + s_k) - X_nu|; NaN if nu = inf
  std::vector<EventLabel> labels;
  std::vector<double> phi_at_t;  // phi_eps(X_t - y0)

  std::int64_t window_steps() const {
    return grid.n_steps - window_start;
  }
};

// Euler-Maruyama under Q. Throws NanDivergenceError if a state leaves the
// finite range.
PathEnsemble simulate_euler(const CoefficientSpec& spec, const SimGrid& grid,
                            std::int64_t n_paths, std::uint64_t seed,
                            const SimulateOptions& opts = {});

// One localized path from (v, y) on `grid` (grid.t_start == v), consuming the
// supplied increments so the result is coupled to whatever produced them.
// driftless = true drops b_bar (the P-dynamics of the measure change).
std::vector<double> simulate_localized(const TruncatedCoeffs& tc, double v,
                                       double y, const SimGrid& grid,
                                       std::span<const double> increments,
                                       bool driftless);

// Grid stopping times on a stored path: nu = first node >= t - delta with X
// in the closed 3 eps-ball, tau = first node >= nu with X outside the closed
// 4 eps-ball (search up to t). +infinity when the event never happens.
struct StoppingTimes {
  double nu;
  double tau;
};
StoppingTimes stopping_times(std::span<const double> path, const SimGrid& grid,
                             double t, double delta,
                             const CoefficientSpec& spec);

struct EventSummary {
  std::int64_t n_phi_positive = 0;
  std::int64_t n_A = 0;
  std::int64_t n_C = 0;
  std::int64_t n_exceptions = 0;  // phi > 0 but neither A nor C (grid gaps)
  double exception_fraction = 0.0;
};

// Labels every path. A: phi > 0, nu == t - delta, tau > t. C: phi > 0, the
// restarted localized path moves >= eps from X_nu within delta, and not A.
// Paths are re-walked from the ensemble's seed (identical noise), so stored
// windows are not required. Throws DecompositionViolation when the fraction
// of localized paths that are neither A nor C exceeds max_exception_fraction.
EventSummary classify_events(PathEnsemble& ens, const TruncatedCoeffs& tc,
                             double mollifier_knot = 0.0,
                             double max_exception_fraction = 1e-3);

struct EventRatePoint {
  double delta = 0.0;
  double probability = 0.0;  // hits / n_paths
  double ci_lo = 0.0;        // Wilson 95%
  double ci_hi = 0.0;
  std::int64_t hits = 0;
  std::int64_t n_localized = 0;  // paths with nu < infinity
  double oracle = 0.0;           // 4 exp(-eps^2 / (4 sup_sigma^2 delta))
  double markov_shape = 0.0;     // sup_sigma^2 delta + (delta sup_b)^2, /eps^2
};

struct EventRateReport {
  std::vector<EventRatePoint> points;
  bool insufficient_hits = false;  // no delta produced a hit
  double slope = 0.0;              // log prob vs log delta over hit deltas
  double slope_se = 0.0;
  int slope_points = 0;
};

// Probability that the localized path restarted at nu moves >= eps within
// delta, estimated per delta. The sup is over grid nodes, so the estimate is
// a lower bound for the continuous-time event (noted in output metadata).
EventRateReport estimate_event_rate(const CoefficientSpec& spec,
                                    const TruncatedCoeffs& tc, double t,
                                    std::span<const double> deltas,
                                    std::int64_t n_paths, std::uint64_t seed,
                                    std::int64_t n_steps);

// ---- Localization-window ensembles (shared by girsanov / malliavin) ----

struct WindowConfig {
  double t = 1.0;
  double delta = 0.1;
  std::int64_t window_steps = 64;
  std::int64_t pre_steps = 256;  // Euler steps for X on [0, t - delta]
  std::int64_t n_paths = 1;
  std::uint64_t seed = 1;
  bool driftless = true;                   // P-dynamics (sigma_bar only)
  std::optional<double> fixed_start;       // start at y instead of X_{t-delta}
};

// Localized paths on [t - delta, t]: started from the Q-simulation of X at
// t - delta (or a fixed point), then advanced with sigma_bar (and b_bar when
// not driftless). Window increments are the path's stream continued past the
// pre-simulation steps.
struct WindowEnsemble {
  SimGrid window;
  std::int64_t n_paths = 0;
  std::uint64_t seed = 0;
  bool driftless = true;
  std::vector<double> x_start;  // start value per path
  std::vector<double> xbar;     // n_paths x (window_steps+1)
  std::vector<double> dw;       // n_paths x window_steps

  double x_at(std::int64_t path, std::int64_t k) const {
    return xbar[path * (window.n_steps + 1) + k];
  }
  double dw_at(std::int64_t path, std::int64_t k) const {
    return dw[path * window.n_steps + k];
  }
  double terminal(std::int64_t path) const {
    return x_at(path, window.n_steps);
  }
};

WindowEnsemble simulate_window(const CoefficientSpec& spec,
                               const TruncatedCoeffs& tc,
                               const WindowConfig& cfg);

// Binary columnar persistence (little-endian, header carries seed, grid and
// a digest of the producing scenario). Extra named columns may be appended,
// e.g. Girsanov weights.
void save_ensemble(const PathEnsemble& ens, const std::string& path,
                   std::uint64_t spec_digest,
                   const std::vector<std::pair<std::string, std::vector<double>>>&
                       extra_columns = {});
struct LoadedEnsemble {
  PathEnsemble ensemble;
  std::uint64_t spec_digest = 0;
  std::vector<std::pair<std::string, std::vector<double>>> extra_columns;
};
LoadedEnsemble load_ensemble(const std::string& path);

}  // namespace sdelab
