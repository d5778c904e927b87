#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gpdex/bounds.hpp"
#include "gpdex/geometry.hpp"
#include "gpdex/gp.hpp"
#include "gpdex/kernels.hpp"

namespace gpdex {

// Design objectives, all minimized. The conditioning objectives carry a
// minus sign so that better-conditioned designs score lower. Custom wraps an
// arbitrary design functional.
enum class ObjectiveKind {
  NominalSup,     // worst-case prediction bound; adds the trend inflation when p > 0
  NominalTwoRegime,   // two-regime worst-case bound
  NumericFloor,   // minus the separation radius (the stationary floor is monotone in it)
  NumericFloorTwoRegime,   // minus the per-regime two-regime eigenvalue floor
  ParamBoundSup,  // worst-case parameter-estimation criterion
  Custom,
};

ObjectiveKind objective_kind_from_string(const std::string& name);
std::string to_string(ObjectiveKind kind);

struct Objective {
  ObjectiveKind kind = ObjectiveKind::NominalSup;
  KernelSpec spec;
  RegressionBasis basis;
  CandidateGrid grid;        // evaluation grid for the sup-based objectives
  TwoRegimeNominalConfig two_regime;  // {0,0} means: take the weight model's constants
  SpectralConfig spectral;   // c_star 0 means: dimension default
  std::function<double(const DesignMatrix&)> custom;

  // Factorization failures and other numeric breakdowns score +infinity so
  // the search simply moves away; configuration errors still throw.
  double operator()(const DesignMatrix& X) const;

  static Objective make(ObjectiveKind kind, KernelSpec spec, RegressionBasis basis,
                        CandidateGrid grid);
};

struct NmConfig {
  long max_evals = 20000;
  double init_spread = 0.05;   // axis step building the initial simplex
  double tol_diam = 1e-6;      // sup-norm simplex diameter
  double tol_spread = 1e-10;   // value spread across the simplex
  double penalty_coeff = 1e3;  // quadratic pressure on out-of-box coordinates
};

struct TracePoint {
  long eval = 0;
  double best = 0.0;
  double diameter = 0.0;
};

struct OptimResult {
  DesignMatrix design;  // clipped to the unit box and re-scored without penalty
  double value = 0.0;
  long evals = 0;
  bool converged = false;
  std::vector<TracePoint> trace;
};

// Derivative-free simplex search over the flattened n x d coordinates.
// Deterministic for identical inputs.
OptimResult nelder_mead(const Objective& objective, const DesignMatrix& start,
                        const NmConfig& cfg);

struct HomotopyConfig {
  int stages = 10;  // 1 reproduces a direct run on the target
  NmConfig nm;     // per-stage search budget and tolerances
};

// Continuation from an easy source objective to the target: stage k of K
// minimizes (1 - k/K) source + (k/K) target, warm-started from the previous
// stage. Useful when the target is flat far from good designs.
OptimResult homotopy_optimize(const Objective& source, const Objective& target,
                              const DesignMatrix& start, const HomotopyConfig& cfg);

// Scale-free dispersion of the nearest-neighbor distances (sd / mean);
// small values indicate near-lattice spacing.
double nn_distance_cv(const DesignMatrix& X);

// Mean over the 2^d box corners of the distance to the nearest design point.
double mean_corner_distance(const DesignMatrix& X);

// Mean Euclidean separation radius of the points with first coordinate below
// 0.5 versus the rest; NaN for an empty side.
std::pair<double, double> halfspace_mean_qj(const DesignMatrix& X);

struct FigureResult {
  std::string name;
  OptimResult result;
  KernelSpec spec;  // target kernel the preset optimized under
  double nn_cv = 0.0;
  double mean_corner_dist = 0.0;
  double qj_mean_left = 0.0;
  double qj_mean_right = 0.0;
};

std::vector<std::string> figure_names();

// Named optimization presets (23 points in 2-d). budget_override > 0 replaces
// the per-stage evaluation budget.
FigureResult reproduce_figure(const std::string& name, std::uint64_t seed,
                              long budget_override = 0);

}  // namespace gpdex
