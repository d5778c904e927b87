#pragma once

// Reference implementations the tests compare the library against. Everything
// here favors obviousness over speed: dumb scans, dense algebra, central
// differences.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "gpdex/geometry.hpp"
#include "gpdex/kernels.hpp"
#include "gpdex/rng.hpp"

namespace oracle {

// Scan of anchored boxes [0, y): per axis the tick set is a uniform grid
// merged with the design coordinates themselves, and both open and closed
// point counts are taken at every corner, so the boundary suprema at design
// coordinates are hit exactly.
inline double star_discrepancy_scan(const gpdex::DesignMatrix& X, int res) {
  const int n = X.n();
  const int d = X.d();
  std::vector<std::vector<double>> ticks(static_cast<std::size_t>(d));
  for (int j = 0; j < d; ++j) {
    std::vector<double>& t = ticks[static_cast<std::size_t>(j)];
    for (int i = 0; i <= res; ++i) t.push_back(static_cast<double>(i) / res);
    for (int i = 0; i < n; ++i) t.push_back(X.pts(i, j));
    std::sort(t.begin(), t.end());
    t.erase(std::unique(t.begin(), t.end()), t.end());
  }
  std::vector<std::size_t> idx(static_cast<std::size_t>(d), 0);
  double worst = 0.0;
  for (;;) {
    double vol = 1.0;
    for (int j = 0; j < d; ++j) vol *= ticks[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]];
    int open = 0, closed = 0;
    for (int i = 0; i < n; ++i) {
      bool in_open = true, in_closed = true;
      for (int j = 0; j < d; ++j) {
        const double y = ticks[static_cast<std::size_t>(j)][idx[static_cast<std::size_t>(j)]];
        in_open = in_open && X.pts(i, j) < y;
        in_closed = in_closed && X.pts(i, j) <= y;
      }
      open += in_open;
      closed += in_closed;
    }
    worst = std::max(worst, std::abs(vol - static_cast<double>(open) / n));
    worst = std::max(worst, std::abs(vol - static_cast<double>(closed) / n));
    int j = 0;
    for (; j < d; ++j) {
      if (++idx[static_cast<std::size_t>(j)] < ticks[static_cast<std::size_t>(j)].size()) break;
      idx[static_cast<std::size_t>(j)] = 0;
    }
    if (j == d) break;
  }
  return worst;
}

inline double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Relative gap with a floor so near-zero pairs compare absolutely.
inline double rel_gap(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline gpdex::DesignMatrix random_design(gpdex::Rng& rng, int n, int d) {
  Eigen::MatrixXd pts(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) pts(i, j) = rng.uniform01();
  return gpdex::DesignMatrix(pts);
}

// Smallest eigenvalue of the kernel matrix, dense.
inline double lambda_min_direct(const gpdex::DesignMatrix& X, const gpdex::KernelSpec& spec) {
  const Eigen::MatrixXd K = gpdex::kernel_matrix(spec, X.pts, X.pts);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace oracle
