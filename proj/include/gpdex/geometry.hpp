#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace gpdex {

// A set of n experimental runs in [0,1]^d, one row per point.
// Duplicate rows are legal; operations that degenerate under duplicates
// (separation radii, separation-based bounds) surface that in their outputs
// rather than rejecting the design. The optimizer is allowed to hold
// out-of-box candidates internally; require_in_unit_box() is the gate every
// imported or exported design passes through.
struct DesignMatrix {
  Eigen::MatrixXd pts;  // n x d

  DesignMatrix() = default;
  explicit DesignMatrix(Eigen::MatrixXd p) : pts(std::move(p)) {}

  int n() const { return static_cast<int>(pts.rows()); }
  int d() const { return static_cast<int>(pts.cols()); }

  // Throws std::invalid_argument naming the offending coordinate.
  void require_in_unit_box(double tol = 0.0) const;
};

// Invertible linear map Theta; distances are ||Theta (u - v)||_2.
struct Anisotropy {
  Eigen::MatrixXd M;  // d x d

  explicit Anisotropy(Eigen::MatrixXd m);  // rejects |det| <= 1e-12

  int d() const { return static_cast<int>(M.rows()); }

  static Anisotropy isotropic(int d, double c);
  static Anisotropy diagonal(const Eigen::VectorXd& scales);

  // Largest metric distance between two points of the unit box; attained at
  // a pair of opposite-ish corners because ||M w|| is convex in w.
  double domain_diameter() const;
};

double mahalanobis_distance(const Anisotropy& A, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& v);

// Regular product grid over [0,1]^d used for suprema and Voronoi summaries.
// Endpoints are included, so all 2^d corners are grid points.
struct CandidateGrid {
  int dim = 0;
  int resolution = 0;
  Eigen::MatrixXd pts;  // resolution^dim x dim

  static int default_resolution(int d);
  static CandidateGrid regular(int d, int resolution = 0);  // 0 -> default
};

// sup over the grid of the metric distance to the nearest design point.
double fill_distance(const DesignMatrix& X, const Anisotropy& A,
                     const CandidateGrid& grid);

struct Separation {
  double q = 0.0;       // min over j of qj
  Eigen::VectorXd qj;   // half the metric distance to the nearest other point
};
Separation separation(const DesignMatrix& X, const Anisotropy& A);

struct VoronoiSup {
  Eigen::VectorXi owner;     // grid point -> nearest design index (ties: lowest)
  Eigen::VectorXd sup_dist;  // per design point: sup metric distance over its
                             // cell; 0 for cells holding no grid point
};
VoronoiSup voronoi_sup_distances(const DesignMatrix& X, const Anisotropy& A,
                                 const CandidateGrid& grid);

// Cell membership is taken under each metric separately and the two cells of a
// design point are merged; the suprema below run over that union.
struct UnionCellSup {
  Eigen::VectorXd sup_d1;      // metric of A1
  Eigen::VectorXd sup_d2;      // metric of A2
  Eigen::VectorXd sup_euclid;  // plain Euclidean, for Lipschitz remainders
};
UnionCellSup union_cell_sup_distances(const DesignMatrix& X,
                                      const Anisotropy& A1,
                                      const Anisotropy& A2,
                                      const CandidateGrid& grid);

// Exact star discrepancy: sup over anchored boxes [0,u) of the gap between
// the empirical fraction and the volume. Evaluates both the open-box and
// closed-box counts on the critical corner set (per-axis point coordinates
// plus 1), which is where the sup is attained. O((n+1)^d * n * d).
double star_discrepancy(const DesignMatrix& X);

// CSV layout: one point per row, d numeric columns; header "x1,...,xd"
// optional on read, always written. Values are written with 17 significant
// digits so a round trip is bit exact.
DesignMatrix read_design_csv(const std::string& path);
void write_design_csv(const std::string& path, const DesignMatrix& X);

// Single column "f" (header optional on read, written on write).
Eigen::VectorXd read_observations_csv(const std::string& path);
void write_observations_csv(const std::string& path, const Eigen::VectorXd& f);

}  // namespace gpdex
