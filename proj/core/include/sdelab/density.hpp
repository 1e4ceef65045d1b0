#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sdelab/charfn.hpp"

namespace sdelab {

// Tail model for the characteristic function beyond the quadrature cutoff.
struct TailModel {
  enum class Kind { none, power_law };
  Kind kind = Kind::none;
  double c = 0.0;
  double gamma = 0.0;

  static TailModel none() { return TailModel{}; }
  static TailModel power_law(double c, double gamma) {
    return TailModel{Kind::power_law, c, gamma};
  }
};

struct ErrorBudget {
  double quadrature = 0.0;  // Richardson estimate from a half-resolution pass
  double tail = 0.0;        // (C / (pi gamma)) cutoff^{-gamma} when modeled
  double mc = 0.0;          // (1/pi) integral of the per-theta SEs
  bool tail_modeled = false;
  double total() const { return quadrature + tail + mc; }
};

struct DensityProfile {
  std::vector<double> xs;
  std::vector<double> values;
  double theta_cutoff = 0.0;
  ErrorBudget budget;
  double imag_residue = 0.0;  // max |imaginary part| over the grid
  std::optional<double> holder_alpha;
  std::optional<double> holder_modulus;
};

// (1/2pi) integral over [-cutoff, cutoff] of e^{-i theta x} cf(theta), with
// the table extended to negative theta by conjugate symmetry. The geometric
// table is resampled to a uniform grid (default 4096 nodes) by cubic
// interpolation of the re/im parts and integrated by the trapezoid rule.
// The table must include theta = 0 and reach the cutoff.
DensityProfile levy_invert(const CharFnTable& table, std::span<const double> xs,
                           double theta_cutoff,
                           const TailModel& tail = TailModel::none(),
                           int resample_nodes = 4096);

// p_{y0} = m0 * (density of the normalized localized law); the degenerate
// branch m0 = 0 returns the zero profile.
DensityProfile local_density(double m0, const DensityProfile& normalized);

struct HolderReport {
  double empirical_modulus = 0.0;  // max over grid pairs |f(x)-f(y)|/|x-y|^a
  double integral_bound = 0.0;     // (2^{1-a}/2pi) int |theta|^a |cf| dtheta
  double c_alpha_const = 0.0;      // the 2^{1-a} constant in the bound
  bool tail_divergent = false;     // alpha >= gamma under the power-law tail
  double tail_exponent = 0.0;      // alpha - gamma (growth rate when divergent)
};

// Empirical Holder modulus of the profile against the inversion-side bound.
// The complex-increment constant |e^{iu} - 1| <= C_a |u|^a is instantiated as
// C_a = 2^{1-a} (valid since |e^{iu} - 1| <= min(2, |u|)).
HolderReport holder_modulus(const DensityProfile& profile,
                            const CharFnTable& table, double alpha,
                            const TailModel& tail = TailModel::none(),
                            int resample_nodes = 4096);

// Gaussian-kernel density estimate: an independent cross-check of the
// inversion pipeline, never part of its error budget.
DensityProfile kde_oracle(std::span<const double> samples, double bandwidth,
                          std::span<const double> xs);

}  // namespace sdelab
