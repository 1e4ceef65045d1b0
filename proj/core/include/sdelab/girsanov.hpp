#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sdelab/sde.hpp"
#include "sdelab/stats.hpp"

namespace sdelab {

// Change-of-measure weights along a driftless localized window. The primary
// form is the exponential martingale of the window's Brownian motion W,
//   Z = exp( sum psi(X)dW - 1/2 sum psi(X)^2 dt )          (left-point rule);
// written against the drifted motion B = W - int psi dt the same quantity
// carries +1/2 int psi^2. The discrete solution of dZ = Z psi dW is kept
// alongside and the gap between the two is reported, not normalized away.
struct GirsanovWeights {
  std::vector<double> z;      // exponential form (primary)
  std::vector<double> z_sde;  // product form Z_{k+1} = Z_k (1 + psi dW)
  std::vector<double> log_z;
  double delta = 0.0;
  double psi_sup = 0.0;
  double mean_abs_rel_gap = 0.0;  // mean |z_sde - z| / z over paths
  double weak_gap = 0.0;          // |mean(z_sde) - mean(z)|
};

GirsanovWeights girsanov_weight(const WindowEnsemble& we,
                                const TruncatedCoeffs& tc);

struct MomentBoundReport {
  double p = 2.0;
  double empirical = 0.0;
  double se = 0.0;
  Interval ci;        // bootstrap percentile CI of the mean
  double bound = 0.0; // exp(p(p-1)/2 delta psi_sup^2)
  bool pass = false;  // ci.hi <= bound * 1.02
};

MomentBoundReport moment_bound_check(const GirsanovWeights& w, double p,
                                     std::uint64_t bootstrap_seed = 17,
                                     int bootstrap_resamples = 200);

// E[ f(Xbar_t) Z_t 1_event ] over the window ensemble. The indicator is a
// per-path predicate; pass nullptr for no restriction.
MeanSE reweighted_expectation(const std::function<double(double)>& f,
                              const WindowEnsemble& we,
                              const GirsanovWeights& w,
                              const std::function<bool(std::int64_t)>& event =
                                  nullptr);

// Moment bound behind the weights: E[Z^p] <= exp(p(p-1)/2 delta psi_sup^2),
// hence the L^q norm bound ||Z||_q <= exp((q-1)/2 delta psi_sup^2).
double exp_martingale_moment_bound(double p, double delta, double psi_sup);
double z_norm_bound(double q, double delta, double psi_sup);

// Computable upper bound for the approximation constant
//   C_alpha = max( 2/sqrt(1+alpha) ||Z||_{2/(1-alpha)} ||sigma_bar||^alpha,
//                  ||psi||^2 ||Z||_2 ),
// with the Z-norms replaced by their exponential-martingale bounds. As
// alpha -> 1 the first branch's exponent blows up; the bound is reported as
// computed (possibly infinite), never clamped.
struct CAlphaBound {
  double holder_branch = 0.0;
  double drift_branch = 0.0;
  double value = 0.0;
};
CAlphaBound compute_C_alpha(const TruncatedCoeffs& tc, double delta,
                            double alpha);

}  // namespace sdelab
