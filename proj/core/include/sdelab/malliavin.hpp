#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sdelab/girsanov.hpp"
#include "sdelab/sde.hpp"
#include "sdelab/stats.hpp"

namespace sdelab {

// Numerical Malliavin calculus on the driftless localized window, built on
// the exact finite-dimensional calculus of the Euler scheme: the derivative
// of a path functional at time slot k is its partial derivative with respect
// to the k-th Brownian increment. With that dictionary the duality between
// derivative and divergence holds exactly (not just up to discretization), so
// integration-by-parts identities are checked against Monte Carlo noise only.

enum class FKind {
  w_increment,    // F = W_t - W_{t-delta}
  xbar_terminal,  // F = Xbar_t
};

enum class GKind {
  one,    // G = 1
  phi,    // G = phi_eps(Xbar_t - y0)
  phi_w,  // G = phi_eps(Xbar_t - y0) (W_t - W_{t-delta})
};

// Per-path derivative slots D_k F and Malliavin covariance M_F = sum D^2 dt.
struct DerivativeTable {
  SimGrid grid;
  FKind f_kind = FKind::w_increment;
  std::int64_t n_paths = 0;
  std::vector<double> dsf;  // n_paths x window_steps
  std::vector<double> m;    // n_paths
  std::vector<double> f;    // n_paths, the functional itself

  double dsf_at(std::int64_t p, std::int64_t k) const {
    return dsf[p * grid.n_steps + k];
  }
};

// Chain rule down the Euler recursion:
//   D_k Xbar_t = sigma_bar(X_k) prod_{j>k} (1 + sigma_bar'(X_j) dW_j),
// and D_k F = 1 for the plain increment.
DerivativeTable first_variation(const WindowEnsemble& we,
                                const TruncatedCoeffs& tc, FKind f_kind);

// M_F = sum_k (D_k F)^2 dt, recomputed from the table. Throws if any path
// yields M_F <= 0 (cannot happen for elliptic sigma_bar: the last slot alone
// contributes sigma_bar(X_{K-1})^2 dt).
std::vector<double> malliavin_covariance(const DerivativeTable& table);

// Skorokhod integral of an adapted step process (equals the Ito sum).
double skorokhod_adapted(std::span<const double> u, std::span<const double> dw);

// Integration-by-parts weights H_n with E[phi^(n)(F) G] = E[phi(F) H_n].
// Supported registry:
//   (a) F = w_increment, any G, order 1 or 2;
//   (b) F = xbar_terminal with constant sigma, any G, order 1 or 2;
//   (c) F = xbar_terminal with general smooth sigma_bar, G = 1, order 1.
// Other combinations throw std::invalid_argument. mollifier_knot <= 0 picks
// the default plateau knot 1.5 eps.
std::vector<double> ibp_weight(const WindowEnsemble& we,
                               const TruncatedCoeffs& tc, FKind f_kind,
                               GKind g_kind, int order,
                               double mollifier_knot = 0.0);

// Test functions phi for the identity check, with analytic derivatives.
struct TestFunction {
  std::string name;
  std::function<double(double)> f;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
};
TestFunction test_fn_sine(double freq);
TestFunction test_fn_quadratic();
TestFunction test_fn_bump(double eps, double knot);

struct IbpReport {
  MeanSE lhs;   // E[phi^(n)(F) G]
  MeanSE rhs;   // E[phi(F) H_n]
  MeanSE diff;  // paired per-path difference (its SE is the combined SE)
  int order = 1;
  double delta = 0.0;
  double hn_l2_norm = 0.0;
  double h1_l2_norm = 0.0;
  bool pass = false;  // |diff.mean| <= 4 diff.se
};

IbpReport verify_ibp(const WindowEnsemble& we, const TruncatedCoeffs& tc,
                     FKind f_kind, GKind g_kind, int order,
                     const TestFunction& phi, double mollifier_knot = 0.0);

// ||H_{n2}||_{L2} against delta on a ladder; the weights scale like
// delta^{-n2/2}.
struct NormScalingReport {
  std::vector<double> deltas;
  std::vector<double> norms;
  double slope = 0.0;
  double slope_se = 0.0;
};

NormScalingReport weight_norm_scaling(const CoefficientSpec& spec,
                                      const TruncatedCoeffs& tc, FKind f_kind,
                                      GKind g_kind, int n2,
                                      std::span<const double> deltas,
                                      std::int64_t n_paths, std::uint64_t seed,
                                      std::int64_t window_steps, double t,
                                      double start_y);

}  // namespace sdelab
