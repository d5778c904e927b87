#pragma once

#include <cstdint>
#include <string>

#include "gpdex/geometry.hpp"

namespace gpdex {

enum class DesignFamily {
  RandomUniform,
  RandomLhs,
  MaximinLhs,
  SOptimalLhs,
  TriangularLattice,
};

DesignFamily design_family_from_string(const std::string& name);
std::string to_string(DesignFamily family);

// n points in [0,1]^d, deterministic in (family, n, d, seed). The Latin
// hypercube variants share the same base sample for a given seed; the
// optimized ones then run a fixed budget of stratum-preserving swaps that
// are kept only on strict improvement. The triangular lattice is d = 2 only
// and ignores the seed.
DesignMatrix generate_design(DesignFamily family, int n, int d, std::uint64_t seed);

enum class ScaleObjective { MinFill, MaxSeparation };

// Largest factor s such that centering the design's bounding box in the unit
// box and then scaling about the box center by s keeps every point inside.
double max_inbox_scale(const DesignMatrix& X);

struct ScaleResult {
  DesignMatrix design;
  double scale = 1.0;
  double objective = 0.0;  // achieved fill distance or separation radius
};

// Recenters the design and picks the scale in (0, max_inbox_scale] that
// minimizes the fill distance or maximizes the separation radius under the
// given metric. Separation grows linearly in the scale, so MaxSeparation
// returns the feasibility limit exactly; MinFill is searched by golden
// section with both interval ends checked.
ScaleResult scale_to_objective(const DesignMatrix& X, ScaleObjective what,
                               const Anisotropy& A, const CandidateGrid& grid);

}  // namespace gpdex
