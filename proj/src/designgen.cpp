#include "gpdex/designgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "gpdex/rng.hpp"

namespace gpdex {

namespace {

constexpr long kSwapBudget = 10000;

Eigen::MatrixXd random_uniform(int n, int d, Rng& r) {
  Eigen::MatrixXd P(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) P(i, j) = r.uniform01();
  return P;
}

// One stratum per point and axis, uniformly jittered within the stratum.
Eigen::MatrixXd random_lhs(int n, int d, Rng& r) {
  Eigen::MatrixXd P(n, d);
  std::vector<int> perm(n);
  for (int j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    r.shuffle(perm);
    for (int i = 0; i < n; ++i) P(i, j) = (perm[i] + r.uniform01()) / n;
  }
  return P;
}

Eigen::MatrixXd pairwise_sq_dist(const Eigen::MatrixXd& P) {
  const int n = static_cast<int>(P.rows());
  Eigen::MatrixXd D(n, n);
  for (int i = 0; i < n; ++i) {
    D(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j)
      D(i, j) = D(j, i) = (P.row(i) - P.row(j)).squaredNorm();
  }
  return D;
}

double min_offdiag(const Eigen::MatrixXd& D) {
  const int n = static_cast<int>(D.rows());
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) m = std::min(m, D(i, j));
  return m;
}

// Sum over pairs of inverse distance; the S criterion penalizes any close pair.
double inverse_dist_sum(const Eigen::MatrixXd& D) {
  const int n = static_cast<int>(D.rows());
  double s = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) s += 1.0 / std::sqrt(D(i, j));
  return s;
}

void update_rows(Eigen::MatrixXd& D, const Eigen::MatrixXd& P, int i) {
  const int n = static_cast<int>(P.rows());
  for (int k = 0; k < n; ++k) {
    if (k == i) continue;
    D(i, k) = D(k, i) = (P.row(i) - P.row(k)).squaredNorm();
  }
}

// Stratum-preserving coordinate swaps, kept on strict improvement only.
// maximize_min: true for the maximin criterion, false minimizes the inverse
// distance sum.
Eigen::MatrixXd swap_optimize(Eigen::MatrixXd P, bool maximize_min, Rng& r) {
  const int n = static_cast<int>(P.rows());
  const int d = static_cast<int>(P.cols());
  if (n < 2) return P;
  Eigen::MatrixXd D = pairwise_sq_dist(P);
  double score = maximize_min ? min_offdiag(D) : inverse_dist_sum(D);
  for (long attempt = 0; attempt < kSwapBudget; ++attempt) {
    const int k = static_cast<int>(r.below(static_cast<std::uint64_t>(d)));
    const int i = static_cast<int>(r.below(static_cast<std::uint64_t>(n)));
    int j = static_cast<int>(r.below(static_cast<std::uint64_t>(n)));
    while (j == i) j = static_cast<int>(r.below(static_cast<std::uint64_t>(n)));
    std::swap(P(i, k), P(j, k));
    update_rows(D, P, i);
    update_rows(D, P, j);
    const double trial = maximize_min ? min_offdiag(D) : inverse_dist_sum(D);
    const bool keep = maximize_min ? trial > score : trial < score;
    if (keep) {
      score = trial;
    } else {
      std::swap(P(i, k), P(j, k));
      update_rows(D, P, i);
      update_rows(D, P, j);
    }
  }
  return P;
}

// Rows of a triangular lattice covering slightly more than n points; the
// extras closest to the patch boundary are dropped, then each axis is
// stretched onto [0,1].
Eigen::MatrixXd triangular_lattice(int n) {
  const int rows = static_cast<int>(std::ceil(std::sqrt(n * 2.0 / std::sqrt(3.0))));
  const int cols = (n + rows - 1) / rows;
  std::vector<Eigen::Vector2d> raw;
  for (int j = 0; j < rows; ++j)
    for (int i = 0; i < cols; ++i)
      raw.emplace_back(i + 0.5 * (j % 2), j * std::sqrt(3.0) / 2.0);

  double lo_x = raw[0].x(), hi_x = raw[0].x(), lo_y = raw[0].y(), hi_y = raw[0].y();
  for (const auto& p : raw) {
    lo_x = std::min(lo_x, p.x());
    hi_x = std::max(hi_x, p.x());
    lo_y = std::min(lo_y, p.y());
    hi_y = std::max(hi_y, p.y());
  }
  std::vector<int> order(raw.size());
  std::iota(order.begin(), order.end(), 0);
  auto boundary_gap = [&](int idx) {
    const auto& p = raw[idx];
    return std::min(std::min(p.x() - lo_x, hi_x - p.x()),
                    std::min(p.y() - lo_y, hi_y - p.y()));
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double ga = boundary_gap(a), gb = boundary_gap(b);
    if (ga != gb) return ga > gb;
    return a < b;
  });
  order.resize(n);
  std::sort(order.begin(), order.end());

  Eigen::MatrixXd P(n, 2);
  for (int i = 0; i < n; ++i) P.row(i) = raw[order[i]];
  for (int j = 0; j < 2; ++j) {
    const double lo = P.col(j).minCoeff(), hi = P.col(j).maxCoeff();
    if (hi > lo)
      P.col(j) = (P.col(j).array() - lo) / (hi - lo);
    else
      P.col(j).setConstant(0.5);
  }
  return P;
}

}  // namespace

DesignFamily design_family_from_string(const std::string& name) {
  if (name == "random-uniform" || name == "uniform") return DesignFamily::RandomUniform;
  if (name == "random-lhs" || name == "lhs") return DesignFamily::RandomLhs;
  if (name == "maximin-lhs") return DesignFamily::MaximinLhs;
  if (name == "s-optimal-lhs") return DesignFamily::SOptimalLhs;
  if (name == "triangular-lattice") return DesignFamily::TriangularLattice;
  throw std::invalid_argument("unknown design family: " + name);
}

std::string to_string(DesignFamily family) {
  switch (family) {
    case DesignFamily::RandomUniform: return "random-uniform";
    case DesignFamily::RandomLhs: return "random-lhs";
    case DesignFamily::MaximinLhs: return "maximin-lhs";
    case DesignFamily::SOptimalLhs: return "s-optimal-lhs";
    case DesignFamily::TriangularLattice: return "triangular-lattice";
  }
  throw std::invalid_argument("unknown design family");
}

DesignMatrix generate_design(DesignFamily family, int n, int d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw std::invalid_argument("design needs n >= 1 and d >= 1");
  Rng r(seed);
  switch (family) {
    case DesignFamily::RandomUniform:
      return DesignMatrix(random_uniform(n, d, r));
    case DesignFamily::RandomLhs:
      return DesignMatrix(random_lhs(n, d, r));
    case DesignFamily::MaximinLhs:
      return DesignMatrix(swap_optimize(random_lhs(n, d, r), true, r));
    case DesignFamily::SOptimalLhs:
      return DesignMatrix(swap_optimize(random_lhs(n, d, r), false, r));
    case DesignFamily::TriangularLattice:
      // the raw lattice spans the box; shrinking it trades boundary coverage
      // for interior coverage, and the fill-optimal scale is the useful one
      if (d != 2) throw std::invalid_argument("triangular lattice is 2-d only");
      return scale_to_objective(DesignMatrix(triangular_lattice(n)), ScaleObjective::MinFill,
                                Anisotropy::isotropic(2, 1.0), CandidateGrid::regular(2))
          .design;
  }
  throw std::invalid_argument("unknown design family");
}

namespace {

Eigen::MatrixXd recenter(const Eigen::MatrixXd& P) {
  Eigen::MatrixXd out = P;
  for (Eigen::Index j = 0; j < P.cols(); ++j) {
    const double mid = 0.5 * (P.col(j).minCoeff() + P.col(j).maxCoeff());
    out.col(j).array() += 0.5 - mid;
  }
  return out;
}

Eigen::MatrixXd scaled_about_center(const Eigen::MatrixXd& P, double s) {
  return ((P.array() - 0.5) * s + 0.5).matrix();
}

}  // namespace

double max_inbox_scale(const DesignMatrix& X) {
  const Eigen::MatrixXd P = recenter(X.pts);
  double s = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < P.rows(); ++i)
    for (Eigen::Index j = 0; j < P.cols(); ++j) {
      const double off = std::abs(P(i, j) - 0.5);
      if (off > 0.0) s = std::min(s, 0.5 / off);
    }
  return std::isfinite(s) ? s : 1.0;  // all points at the center
}

ScaleResult scale_to_objective(const DesignMatrix& X, ScaleObjective what,
                               const Anisotropy& A, const CandidateGrid& grid) {
  const Eigen::MatrixXd P = recenter(X.pts);
  const double hi = max_inbox_scale(X);

  if (what == ScaleObjective::MaxSeparation) {
    ScaleResult out;
    out.scale = hi;
    out.design = DesignMatrix(scaled_about_center(P, hi));
    out.objective = separation(out.design, A).q;
    return out;
  }

  auto fill_at = [&](double s) {
    return fill_distance(DesignMatrix(scaled_about_center(P, s)), A, grid);
  };
  double lo = 1e-3 * hi;
  double a = lo, b = hi;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a), e = a + gr * (b - a);
  double fc = fill_at(c), fe = fill_at(e);
  for (int it = 0; it < 60; ++it) {
    if (fc < fe) {
      b = e;
      e = c;
      fe = fc;
      c = b - gr * (b - a);
      fc = fill_at(c);
    } else {
      a = c;
      c = e;
      fc = fe;
      e = a + gr * (b - a);
      fe = fill_at(e);
    }
  }
  double best_s = fc < fe ? c : e;
  double best_f = std::min(fc, fe);
  // interval ends, larger scale preferred on ties
  for (double s : {lo, hi}) {
    const double f = fill_at(s);
    if (f < best_f || (f == best_f && s > best_s)) {
      best_s = s;
      best_f = f;
    }
  }
  ScaleResult out;
  out.scale = best_s;
  out.design = DesignMatrix(scaled_about_center(P, best_s));
  out.objective = best_f;
  return out;
}

}  // namespace gpdex
