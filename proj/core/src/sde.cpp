#include "sdelab/sde.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "sdelab/errors.hpp"
#include "sdelab/parallel.hpp"
#include "sdelab/rng.hpp"
#include "sdelab/stats.hpp"

namespace sdelab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::int64_t aligned_window_steps(const SimGrid& grid, double delta) {
  const double dt = grid.dt();
  const std::int64_t w = std::llround(delta / dt);
  if (w < 1 || w > grid.n_steps ||
      std::abs(static_cast<double>(w) * dt - delta) >
          1e-9 * std::max(1.0, delta))
    throw std::invalid_argument(
        "window length delta must be a whole number of grid steps");
  return w;
}

}  // namespace

void SimGrid::check() const {
  if (n_steps < 1 || !(t_end > t_start))
    throw std::invalid_argument("SimGrid: need n_steps >= 1 and t_end > t_start");
}

PathEnsemble simulate_euler(const CoefficientSpec& spec, const SimGrid& grid,
                            std::int64_t n_paths, std::uint64_t seed,
                            const SimulateOptions& opts) {
  grid.check();
  if (n_paths < 1) throw std::invalid_argument("simulate_euler: n_paths < 1");

  PathEnsemble ens;
  ens.grid = grid;
  ens.n_paths = n_paths;
  ens.seed = seed;
  ens.delta = opts.delta;

  std::int64_t wsteps = 0;
  if (opts.delta > 0.0) {
    wsteps = aligned_window_steps(grid, opts.delta);
    ens.window_start = grid.n_steps - wsteps;
    ens.x_window_start.resize(n_paths);
  } else {
    ens.window_start = grid.n_steps;
  }
  ens.x_terminal.resize(n_paths);
  if (opts.store_window && wsteps > 0) {
    ens.has_window = true;
    ens.x_window.resize(n_paths * (wsteps + 1));
    ens.dw_window.resize(n_paths * wsteps);
  }
  if (opts.store_full) {
    ens.has_full = true;
    ens.x_full.resize(n_paths * (grid.n_steps + 1));
  }

  const double dt = grid.dt();
  const double sqdt = std::sqrt(dt);
  const bool drift_zero = spec.b.is_zero();

  for_blocks(n_paths, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t p = lo; p < hi; ++p) {
      double x = spec.x0;
      for (std::int64_t k = 0; k <= grid.n_steps; ++k) {
        if (!std::isfinite(x)) throw NanDivergenceError(p, k);
        if (ens.has_full) ens.x_full[p * (grid.n_steps + 1) + k] = x;
        if (k == ens.window_start && opts.delta > 0.0)
          ens.x_window_start[p] = x;
        if (ens.has_window && k >= ens.window_start)
          ens.x_window[p * (wsteps + 1) + (k - ens.window_start)] = x;
        if (k == grid.n_steps) {
          ens.x_terminal[p] = x;
          break;
        }
        const double dw =
            sqdt * normal_draw(seed, static_cast<std::uint64_t>(p),
                               static_cast<std::uint64_t>(k));
        if (ens.has_window && k >= ens.window_start)
          ens.dw_window[p * wsteps + (k - ens.window_start)] = dw;
        const double drift = drift_zero ? 0.0 : spec.b.value(x);
        x += spec.sigma.value(x) * dw + drift * dt;
      }
    }
  });
  return ens;
}

std::vector<double> simulate_localized(const TruncatedCoeffs& tc, double v,
                                       double y, const SimGrid& grid,
                                       std::span<const double> increments,
                                       bool driftless) {
  grid.check();
  if (std::abs(grid.t_start - v) > 1e-12 * std::max(1.0, std::abs(v)))
    throw std::invalid_argument("simulate_localized: grid must start at v");
  if (static_cast<std::int64_t>(increments.size()) != grid.n_steps)
    throw std::invalid_argument("simulate_localized: increments/grid mismatch");
  const double dt = grid.dt();
  std::vector<double> path(grid.n_steps + 1);
  double x = y;
  path[0] = x;
  for (std::int64_t k = 0; k < grid.n_steps; ++k) {
    const double drift = driftless ? 0.0 : tc.b_bar(x);
    x += tc.sigma_bar(x) * increments[k] + drift * dt;
    if (!std::isfinite(x)) throw NanDivergenceError(0, k);
    path[k + 1] = x;
  }
  return path;
}

StoppingTimes stopping_times(std::span<const double> path, const SimGrid& grid,
                             double t, double delta,
                             const CoefficientSpec& spec) {
  grid.check();
  if (!(delta > 0.0) || !(delta < std::min(t, 1.0)))
    throw std::invalid_argument("stopping_times: need 0 < delta < min(t, 1)");
  if (static_cast<std::int64_t>(path.size()) != grid.n_steps + 1)
    throw std::invalid_argument("stopping_times: path/grid mismatch");
  const double dt = grid.dt();
  const std::int64_t k_t = std::llround((t - grid.t_start) / dt);
  if (k_t < 0 || k_t > grid.n_steps)
    throw std::invalid_argument("stopping_times: t outside the grid");
  const std::int64_t k_lo = k_t - aligned_window_steps(grid, delta);

  StoppingTimes st{kInf, kInf};
  std::int64_t knu = -1;
  for (std::int64_t k = std::max<std::int64_t>(0, k_lo); k <= k_t; ++k) {
    if (std::abs(path[k] - spec.y0) <= 3.0 * spec.eps) {
      knu = k;
      st.nu = grid.time(k);
      break;
    }
  }
  if (knu < 0) return st;
  for (std::int64_t k = knu; k <= k_t; ++k) {
    if (std::abs(path[k] - spec.y0) > 4.0 * spec.eps) {
      st.tau = grid.time(k);
      break;
    }
  }
  return st;
}

namespace {

// One streaming walk of path p: the original X from 0 to t and, once nu is
// found, the localized path restarted there on the same increments (which
// continue past t if nu + delta does).
struct WalkResult {
  double x_terminal = 0.0;
  double x_window_start = 0.0;
  double nu = kInf;
  double tau = kInf;
  double sup_incr = std::numeric_limits<double>::quiet_NaN();
};

WalkResult walk_with_events(const CoefficientSpec& spec,
                            const TruncatedCoeffs& tc, const SimGrid& grid,
                            std::int64_t wsteps, std::uint64_t seed,
                            std::int64_t p) {
  const double dt = grid.dt();
  const double sqdt = std::sqrt(dt);
  const double y0 = spec.y0;
  const double eps = spec.eps;
  const std::int64_t window_start = grid.n_steps - wsteps;
  const bool drift_zero = spec.b.is_zero();

  WalkResult r;
  double x = spec.x0;
  double xbar = 0.0;
  double xnu = 0.0;
  std::int64_t knu = -1;
  bool have_tau = false;
  double sup = 0.0;

  std::int64_t k = 0;
  for (;;) {
    const bool x_alive = k <= grid.n_steps;
    if (x_alive) {
      if (!std::isfinite(x)) throw NanDivergenceError(p, k);
      if (k == window_start) r.x_window_start = x;
      if (k >= window_start) {
        if (knu < 0) {
          if (std::abs(x - y0) <= 3.0 * eps) {
            knu = k;
            r.nu = grid.time(k);
            xnu = x;
            xbar = x;
            sup = 0.0;
          }
        } else if (!have_tau && std::abs(x - y0) > 4.0 * eps) {
          have_tau = true;
          r.tau = grid.time(k);
        }
      }
      if (k == grid.n_steps) r.x_terminal = x;
    }
    if (knu >= 0 && k > knu && k <= knu + wsteps) {
      if (!std::isfinite(xbar)) throw NanDivergenceError(p, k);
      sup = std::max(sup, std::abs(xbar - xnu));
    }

    const bool need_x = k < grid.n_steps;
    const bool need_xbar = knu >= 0 && k < knu + wsteps;
    if (!need_x && !need_xbar) break;

    const double dw = sqdt * normal_draw(seed, static_cast<std::uint64_t>(p),
                                         static_cast<std::uint64_t>(k));
    if (need_xbar) {
      xbar += tc.sigma_bar(xbar) * dw + tc.b_bar(xbar) * dt;
    }
    if (need_x) {
      const double drift = drift_zero ? 0.0 : spec.b.value(x);
      x += spec.sigma.value(x) * dw + drift * dt;
    }
    ++k;
  }
  if (knu >= 0) r.sup_incr = sup;
  return r;
}

}  // namespace

EventSummary classify_events(PathEnsemble& ens, const TruncatedCoeffs& tc,
                             double mollifier_knot,
                             double max_exception_fraction) {
  if (!(ens.delta > 0.0))
    throw std::invalid_argument("classify_events: ensemble has no window");
  const CoefficientSpec& spec = tc.spec();
  const std::int64_t wsteps = aligned_window_steps(ens.grid, ens.delta);
  const double knot = mollifier_knot > 0.0 ? mollifier_knot : 1.5 * spec.eps;
  const Mollifier phi(spec.eps, knot);

  ens.nu.assign(ens.n_paths, kInf);
  ens.tau.assign(ens.n_paths, kInf);
  ens.sup_incr.assign(ens.n_paths, std::numeric_limits<double>::quiet_NaN());
  ens.labels.assign(ens.n_paths, EventLabel::neither);
  ens.phi_at_t.assign(ens.n_paths, 0.0);

  const double t_minus_delta = ens.grid.time(ens.grid.n_steps - wsteps);

  for_blocks(ens.n_paths, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t p = lo; p < hi; ++p) {
      const WalkResult r =
          walk_with_events(spec, tc, ens.grid, wsteps, ens.seed, p);
      ens.nu[p] = r.nu;
      ens.tau[p] = r.tau;
      ens.sup_incr[p] = r.sup_incr;
      const double ph = phi.value(r.x_terminal - spec.y0);
      ens.phi_at_t[p] = ph;
      if (ph > 0.0) {
        const bool is_A = r.nu == t_minus_delta && !(r.tau < kInf);
        if (is_A) {
          ens.labels[p] = EventLabel::A;
        } else if (std::isfinite(r.sup_incr) && r.sup_incr >= spec.eps) {
          ens.labels[p] = EventLabel::C;
        }
      }
    }
  });
  ens.has_events = true;

  EventSummary summary;
  for (std::int64_t p = 0; p < ens.n_paths; ++p) {
    if (ens.phi_at_t[p] > 0.0) {
      ++summary.n_phi_positive;
      if (ens.labels[p] == EventLabel::A)
        ++summary.n_A;
      else if (ens.labels[p] == EventLabel::C)
        ++summary.n_C;
      else
        ++summary.n_exceptions;
    }
  }
  summary.exception_fraction =
      summary.n_phi_positive == 0
          ? 0.0
          : static_cast<double>(summary.n_exceptions) /
                static_cast<double>(summary.n_phi_positive);
  if (summary.exception_fraction > max_exception_fraction)
    throw DecompositionViolation(summary.n_exceptions, summary.n_phi_positive);
  return summary;
}

EventRateReport estimate_event_rate(const CoefficientSpec& spec,
                                    const TruncatedCoeffs& tc, double t,
                                    std::span<const double> deltas,
                                    std::int64_t n_paths, std::uint64_t seed,
                                    std::int64_t n_steps) {
  if (deltas.size() < 3)
    throw std::invalid_argument("estimate_event_rate: need >= 3 deltas");
  for (double d : deltas)
    if (!(d > 0.0) || !(d < std::min(t, 1.0)))
      throw std::invalid_argument(
          "estimate_event_rate: deltas must lie in (0, min(t, 1))");

  EventRateReport report;
  const double sup_sigma = tc.sup_sigma_bar();
  const double sup_b = tc.sup_b_bar();

  for (std::size_t di = 0; di < deltas.size(); ++di) {
    const double delta = deltas[di];
    SimGrid grid{0.0, t, n_steps};
    const std::int64_t wsteps = aligned_window_steps(grid, delta);

    const std::int64_t nb = block_count(n_paths);
    std::vector<std::int64_t> hits(nb, 0), localized(nb, 0);
    for_blocks(n_paths, [&](std::int64_t lo, std::int64_t hi) {
      const std::int64_t b = lo / kParallelBlock;
      std::int64_t h = 0, l = 0;
      for (std::int64_t p = lo; p < hi; ++p) {
        const WalkResult r =
            walk_with_events(spec, tc, grid, wsteps, seed + di, p);
        if (std::isfinite(r.nu)) {
          ++l;
          if (r.sup_incr >= spec.eps) ++h;
        }
      }
      hits[b] = h;
      localized[b] = l;
    });

    EventRatePoint pt;
    pt.delta = delta;
    for (std::int64_t b = 0; b < nb; ++b) {
      pt.hits += hits[b];
      pt.n_localized += localized[b];
    }
    const double n = static_cast<double>(n_paths);
    pt.probability = static_cast<double>(pt.hits) / n;
    // Wilson 95% interval.
    const double z = 1.959963984540054;
    const double phat = pt.probability;
    const double denom = 1.0 + z * z / n;
    const double center = (phat + z * z / (2.0 * n)) / denom;
    const double half =
        z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom;
    pt.ci_lo = std::max(0.0, center - half);
    pt.ci_hi = std::min(1.0, center + half);
    pt.oracle =
        4.0 * std::exp(-spec.eps * spec.eps /
                       (4.0 * sup_sigma * sup_sigma * delta));
    pt.markov_shape = (sup_sigma * sup_sigma * delta +
                       (delta * sup_b) * (delta * sup_b)) /
                      (spec.eps * spec.eps);
    report.points.push_back(pt);
  }

  std::vector<double> lx, ly;
  for (const auto& pt : report.points) {
    if (pt.hits > 0) {
      lx.push_back(std::log(pt.delta));
      ly.push_back(std::log(pt.probability));
    }
  }
  report.slope_points = static_cast<int>(lx.size());
  if (lx.empty()) {
    report.insufficient_hits = true;
  } else if (lx.size() >= 2) {
    const LinearFit fit = linear_fit(lx, ly);
    report.slope = fit.slope;
    report.slope_se = fit.slope_se;
  }
  return report;
}

WindowEnsemble simulate_window(const CoefficientSpec& spec,
                               const TruncatedCoeffs& tc,
                               const WindowConfig& cfg) {
  if (cfg.n_paths < 1 || cfg.window_steps < 1)
    throw std::invalid_argument("simulate_window: bad sizes");
  if (!(cfg.delta > 0.0) || !(cfg.delta < std::min(cfg.t, 1.0)))
    throw std::invalid_argument("simulate_window: need 0 < delta < min(t, 1)");

  WindowEnsemble we;
  we.window = SimGrid{cfg.t - cfg.delta, cfg.t, cfg.window_steps};
  we.n_paths = cfg.n_paths;
  we.seed = cfg.seed;
  we.driftless = cfg.driftless;
  we.x_start.resize(cfg.n_paths);
  we.xbar.resize(cfg.n_paths * (cfg.window_steps + 1));
  we.dw.resize(cfg.n_paths * cfg.window_steps);

  const double pre_t = cfg.t - cfg.delta;
  const std::int64_t pre = cfg.fixed_start ? 0 : cfg.pre_steps;
  const double pre_dt = pre > 0 ? pre_t / static_cast<double>(pre) : 0.0;
  const double pre_sqdt = std::sqrt(pre_dt);
  const double wdt = we.window.dt();
  const double wsqdt = std::sqrt(wdt);
  const bool drift_zero = spec.b.is_zero();

  for_blocks(cfg.n_paths, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t p = lo; p < hi; ++p) {
      double x = spec.x0;
      if (cfg.fixed_start) {
        x = *cfg.fixed_start;
      } else {
        for (std::int64_t k = 0; k < pre; ++k) {
          const double dw =
              pre_sqdt * normal_draw(cfg.seed, static_cast<std::uint64_t>(p),
                                     static_cast<std::uint64_t>(k));
          const double drift = drift_zero ? 0.0 : spec.b.value(x);
          x += spec.sigma.value(x) * dw + drift * pre_dt;
          if (!std::isfinite(x)) throw NanDivergenceError(p, k);
        }
      }
      we.x_start[p] = x;
      double* xrow = &we.xbar[p * (cfg.window_steps + 1)];
      double* wrow = &we.dw[p * cfg.window_steps];
      xrow[0] = x;
      for (std::int64_t k = 0; k < cfg.window_steps; ++k) {
        const double dw =
            wsqdt * normal_draw(cfg.seed, static_cast<std::uint64_t>(p),
                                static_cast<std::uint64_t>(pre + k));
        wrow[k] = dw;
        const double drift = cfg.driftless ? 0.0 : tc.b_bar(x);
        x += tc.sigma_bar(x) * dw + drift * wdt;
        if (!std::isfinite(x)) throw NanDivergenceError(p, pre + k);
        xrow[k + 1] = x;
      }
    }
  });
  return we;
}

namespace {

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
void read_pod(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof v);
}

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::ifstream& in, std::vector<double>& v, std::size_t n) {
  v.resize(n);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(n * sizeof(double)));
}

constexpr std::uint32_t kMagic = 0x424C4453u;  // "SDLB" little-endian
constexpr std::uint32_t kFormatVersion = 1;

}  // namespace

void save_ensemble(const PathEnsemble& ens, const std::string& path,
                   std::uint64_t spec_digest,
                   const std::vector<std::pair<std::string, std::vector<double>>>&
                       extra_columns) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_ensemble: cannot open " + path);
  write_pod(out, kMagic);
  write_pod(out, kFormatVersion);
  write_pod(out, ens.seed);
  write_pod(out, ens.n_paths);
  write_pod(out, ens.grid.t_start);
  write_pod(out, ens.grid.t_end);
  write_pod(out, ens.grid.n_steps);
  write_pod(out, ens.delta);
  write_pod(out, ens.window_start);
  write_pod(out, spec_digest);
  const std::uint8_t flags =
      (ens.has_window ? 1u : 0u) | (ens.has_full ? 2u : 0u) |
      (ens.has_events ? 4u : 0u) | (!ens.x_window_start.empty() ? 8u : 0u);
  write_pod(out, flags);
  const std::uint32_t n_extra = static_cast<std::uint32_t>(extra_columns.size());
  write_pod(out, n_extra);

  write_doubles(out, ens.x_terminal);
  if (!ens.x_window_start.empty()) write_doubles(out, ens.x_window_start);
  if (ens.has_window) {
    write_doubles(out, ens.x_window);
    write_doubles(out, ens.dw_window);
  }
  if (ens.has_full) write_doubles(out, ens.x_full);
  if (ens.has_events) {
    write_doubles(out, ens.nu);
    write_doubles(out, ens.tau);
    write_doubles(out, ens.sup_incr);
    out.write(reinterpret_cast<const char*>(ens.labels.data()),
              static_cast<std::streamsize>(ens.labels.size()));
    write_doubles(out, ens.phi_at_t);
  }
  for (const auto& [name, col] : extra_columns) {
    const std::uint16_t len = static_cast<std::uint16_t>(name.size());
    write_pod(out, len);
    out.write(name.data(), len);
    write_doubles(out, col);
  }
  if (!out) throw std::runtime_error("save_ensemble: write failed: " + path);
}

LoadedEnsemble load_ensemble(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_ensemble: cannot open " + path);
  std::uint32_t magic = 0, version = 0;
  read_pod(in, magic);
  read_pod(in, version);
  if (magic != kMagic || version != kFormatVersion)
    throw std::runtime_error("load_ensemble: bad header in " + path);

  LoadedEnsemble le;
  PathEnsemble& ens = le.ensemble;
  read_pod(in, ens.seed);
  read_pod(in, ens.n_paths);
  read_pod(in, ens.grid.t_start);
  read_pod(in, ens.grid.t_end);
  read_pod(in, ens.grid.n_steps);
  read_pod(in, ens.delta);
  read_pod(in, ens.window_start);
  read_pod(in, le.spec_digest);
  std::uint8_t flags = 0;
  read_pod(in, flags);
  std::uint32_t n_extra = 0;
  read_pod(in, n_extra);

  const std::size_t n = static_cast<std::size_t>(ens.n_paths);
  const std::size_t wsteps =
      static_cast<std::size_t>(ens.grid.n_steps - ens.window_start);
  read_doubles(in, ens.x_terminal, n);
  if (flags & 8u) read_doubles(in, ens.x_window_start, n);
  if (flags & 1u) {
    ens.has_window = true;
    read_doubles(in, ens.x_window, n * (wsteps + 1));
    read_doubles(in, ens.dw_window, n * wsteps);
  }
  if (flags & 2u) {
    ens.has_full = true;
    read_doubles(in, ens.x_full,
                 n * static_cast<std::size_t>(ens.grid.n_steps + 1));
  }
  if (flags & 4u) {
    ens.has_events = true;
    read_doubles(in, ens.nu, n);
    read_doubles(in, ens.tau, n);
    read_doubles(in, ens.sup_incr, n);
    ens.labels.resize(n);
    in.read(reinterpret_cast<char*>(ens.labels.data()),
            static_cast<std::streamsize>(n));
    read_doubles(in, ens.phi_at_t, n);
  }
  for (std::uint32_t i = 0; i < n_extra; ++i) {
    std::uint16_t len = 0;
    read_pod(in, len);
    std::string name(len, '\0');
    in.read(name.data(), len);
    std::vector<double> col;
    read_doubles(in, col, n);
    le.extra_columns.emplace_back(std::move(name), std::move(col));
  }
  if (!in) throw std::runtime_error("load_ensemble: truncated file: " + path);
  return le;
}

}  // namespace sdelab
