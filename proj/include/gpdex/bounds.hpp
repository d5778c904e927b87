#pragma once

#include <map>
#include <optional>
#include <string>

#include "gpdex/geometry.hpp"
#include "gpdex/gp.hpp"
#include "gpdex/kernels.hpp"

namespace gpdex {

// Lipschitz constants of the two weight functions entering the two-regime
// remainder term. Defaults come from the weight model's closed forms.
struct TwoRegimeNominalConfig {
  double k1 = 0.0;
  double k2 = 0.0;
  static TwoRegimeNominalConfig from_weights(const WeightModel& w);
};

struct NominalBound {
  double bound = 0.0;
  double fill = 0.0;        // stationary case: metric fill distance
  double argument = 0.0;    // the correlation floor fed into the envelope
  bool truncated = false;   // two-regime argument clamped at 0
  Eigen::VectorXd per_point;  // two-regime: per-point correlation floors
};

// Worst-case zero-mean prediction error bound. Stationary: the envelope
// (sigma2/k)(1 - y)(2k - 1 + y) with k = n phi(0) = n evaluated at
// y = phi(fill distance). Two-regime: the per-point floor combines the two
// regimes' cell suprema through the weights minus a Lipschitz remainder; the
// smallest floor is clamped at 0 and pushed through the same envelope.
NominalBound nominal_bound(const DesignMatrix& X, const KernelSpec& spec,
                           const CandidateGrid& grid);
NominalBound nominal_bound(const DesignMatrix& X, const KernelSpec& spec,
                           const CandidateGrid& grid, const TwoRegimeNominalConfig& cfg);

struct RegressionBound {
  double bound = 0.0;
  double lambda_min_hth = 0.0;  // smallest eigenvalue of H'H
};

// Worst-case inflation from estimating the trend: n sup(Psi) / lambda_min(H'H)
// times the grid sup of |h(x) - H' Psi^{-1} Psi(X, x)|^2. Identically zero
// when the basis consists of kernel half-evaluations at design points.
RegressionBound regression_inflation_bound(const DesignMatrix& X,
                                           const KernelSpec& spec,
                                           const RegressionBasis& basis,
                                           const CandidateGrid& grid);

struct StabilitySummary {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
  double kappa = 0.0;
  double g = 0.0;             // (kappa + 1) / lambda_min
  double g_gershgorin = 0.0;  // row-sum relaxation: (n sup(Psi)/lambda_min + 1)/lambda_min
};
StabilitySummary numeric_g(const DesignMatrix& X, const KernelSpec& spec);

struct RoundingBound {
  double bound = 0.0;
  double r = 0.0;       // delta * kappa; the bound needs r < 1
  bool valid = true;    // false -> bound reported as +infinity
};

// Forward rounding-error bound for the plug-in predictor evaluated at x0 in
// floating point with unit roundoff delta.
RoundingBound numeric_error_bound(const Eigen::VectorXd& x0, const DesignMatrix& X,
                                  const KernelSpec& spec, const RegressionBasis& basis,
                                  const Eigen::VectorXd& f, const Eigen::VectorXd& beta,
                                  double delta);

struct LambdaMinBound {
  double bound = 0.0;
  Eigen::VectorXd per_point;
  bool vacuous = false;  // duplicate points: zero separation, bound is 0
};

// Separation-based lower bound on the smallest eigenvalue of Psi(X, X).
// Two-regime kernels require Theta2 = a Theta1 with a > 1; the coarsened
// spectral floor is used there.
LambdaMinBound lambda_min_lower_bound(const DesignMatrix& X, const KernelSpec& spec,
                                      const SpectralConfig& spectral);

// Two-regime variant that keeps each regime's own spectral mass instead of
// coarsening both to the shared worst frequency window. The stationary
// quadratic-form argument applies regime by regime to the weighted
// coefficients, so this is still a valid floor, and a tighter one. It also
// stays sensitive to point placement where the coarsened floor is locally
// constant, which is what design search needs. No proportionality condition
// on the metrics. Stationary specs return the plain floor.
LambdaMinBound lambda_min_lower_bound_per_regime(const DesignMatrix& X, const KernelSpec& spec,
                                                 const SpectralConfig& spectral);

// One-stop summary of every design metric and bound. Fields that cannot be
// computed for the given configuration are left empty and explained in
// flags; evaluate_all never throws for per-field reasons. All computed
// fields are bit-reproducible for identical inputs; wall_ms is informational
// and excluded from that contract.
struct MetricReport {
  int n = 0;
  int d = 0;
  int grid_resolution = 0;
  double delta = 0.0;

  std::optional<double> fill;           // stationary metric
  std::optional<double> fill_regime1;   // two-regime metrics
  std::optional<double> fill_regime2;
  std::optional<double> separation_q;
  Eigen::VectorXd separation_qj;
  std::optional<double> star_disc;

  std::optional<double> lambda_min, lambda_max, kappa;

  std::optional<double> nominal;
  bool nominal_truncated = false;
  std::optional<double> regression;
  std::optional<double> rounding;
  std::optional<double> rounding_r;
  std::optional<double> stability_g, stability_g_gershgorin;
  std::optional<double> lambda_floor;
  std::optional<double> param_sup, param_exact_sup, param_s1, param_s2;

  double wall_ms = 0.0;
  std::map<std::string, std::string> flags;

  std::string to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

MetricReport evaluate_all(const DesignMatrix& X, const KernelSpec& spec,
                          const RegressionBasis& basis, double delta,
                          const SpectralConfig& spectral, const CandidateGrid& grid);

}  // namespace gpdex
