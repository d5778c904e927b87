#include "gpdex/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gpdex {

void DesignMatrix::require_in_unit_box(double tol) const {
  for (int i = 0; i < n(); ++i) {
    for (int j = 0; j < d(); ++j) {
      const double v = pts(i, j);
      if (!(v >= -tol && v <= 1.0 + tol) || !std::isfinite(v)) {
        std::ostringstream os;
        os << "design point " << i << ", coordinate " << j << " = " << v
           << " is outside [0,1]";
        throw std::invalid_argument(os.str());
      }
    }
  }
}

Anisotropy::Anisotropy(Eigen::MatrixXd m) : M(std::move(m)) {
  if (M.rows() != M.cols() || M.rows() == 0)
    throw std::invalid_argument("anisotropy map must be square and non-empty");
  const double det = M.determinant();
  if (std::abs(det) <= 1e-12) {
    std::ostringstream os;
    os << "anisotropy map is numerically singular (|det| = " << std::abs(det)
       << " <= 1e-12)";
    throw std::invalid_argument(os.str());
  }
}

Anisotropy Anisotropy::isotropic(int d, double c) {
  return Anisotropy(c * Eigen::MatrixXd::Identity(d, d));
}

Anisotropy Anisotropy::diagonal(const Eigen::VectorXd& scales) {
  Eigen::MatrixXd m = scales.asDiagonal();
  return Anisotropy(std::move(m));
}

double Anisotropy::domain_diameter() const {
  const int n = d();
  double best = 0.0;
  // w ranges over the corners of [-1,1]^d; by symmetry half suffice.
  for (std::uint64_t mask = 0; mask < (1ull << n); ++mask) {
    Eigen::VectorXd w(n);
    for (int j = 0; j < n; ++j) w[j] = (mask >> j) & 1 ? 1.0 : -1.0;
    best = std::max(best, (M * w).norm());
  }
  return best;
}

double mahalanobis_distance(const Anisotropy& A, const Eigen::VectorXd& u,
                            const Eigen::VectorXd& v) {
  if (u.size() != v.size() || u.size() != A.d())
    throw std::invalid_argument("mahalanobis_distance: dimension mismatch");
  return (A.M * (u - v)).norm();
}

int CandidateGrid::default_resolution(int d) {
  switch (d) {
    case 1: return 1001;
    case 2: return 101;
    case 3: return 21;
    default: return 11;
  }
}

CandidateGrid CandidateGrid::regular(int d, int resolution) {
  if (d < 1) throw std::invalid_argument("grid dimension must be >= 1");
  if (resolution == 0) resolution = default_resolution(d);
  if (resolution < 2)
    throw std::invalid_argument("grid resolution must be >= 2 to include corners");
  CandidateGrid g;
  g.dim = d;
  g.resolution = resolution;
  std::int64_t total = 1;
  for (int j = 0; j < d; ++j) total *= resolution;
  g.pts.resize(total, d);
  std::vector<int> idx(d, 0);
  for (std::int64_t r = 0; r < total; ++r) {
    for (int j = 0; j < d; ++j)
      g.pts(r, j) = static_cast<double>(idx[j]) / (resolution - 1);
    for (int j = 0; j < d; ++j) {
      if (++idx[j] < resolution) break;
      idx[j] = 0;
    }
  }
  return g;
}

namespace {

// Rows mapped through the metric so that all later work is plain Euclidean.
Eigen::MatrixXd transform_rows(const Eigen::MatrixXd& pts, const Anisotropy& A) {
  return pts * A.M.transpose();
}

void check_dims(const DesignMatrix& X, const Anisotropy& A,
                const CandidateGrid& grid) {
  if (X.n() < 1) throw std::invalid_argument("design must contain at least one point");
  if (X.d() != A.d() || X.d() != grid.dim)
    throw std::invalid_argument("design, anisotropy, and grid dimensions disagree");
}

}  // namespace

double fill_distance(const DesignMatrix& X, const Anisotropy& A,
                     const CandidateGrid& grid) {
  check_dims(X, A, grid);
  const Eigen::MatrixXd T = transform_rows(X.pts, A);
  const Eigen::MatrixXd G = transform_rows(grid.pts, A);
  double worst = 0.0;
  for (int g = 0; g < G.rows(); ++g) {
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < T.rows(); ++i)
      best = std::min(best, (T.row(i) - G.row(g)).squaredNorm());
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

Separation separation(const DesignMatrix& X, const Anisotropy& A) {
  if (X.d() != A.d())
    throw std::invalid_argument("design and anisotropy dimensions disagree");
  const int n = X.n();
  const Eigen::MatrixXd T = transform_rows(X.pts, A);
  Separation s;
  s.qj.resize(n);
  if (n == 1) {
    // A single point has no neighbour; its radius is the degenerate 0.
    s.qj[0] = 0.0;
    s.q = 0.0;
    return s;
  }
  for (int j = 0; j < n; ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < n; ++k) {
      if (k == j) continue;
      best = std::min(best, (T.row(j) - T.row(k)).squaredNorm());
    }
    s.qj[j] = 0.5 * std::sqrt(best);
  }
  s.q = s.qj.minCoeff();
  return s;
}

VoronoiSup voronoi_sup_distances(const DesignMatrix& X, const Anisotropy& A,
                                 const CandidateGrid& grid) {
  check_dims(X, A, grid);
  const Eigen::MatrixXd T = transform_rows(X.pts, A);
  const Eigen::MatrixXd G = transform_rows(grid.pts, A);
  VoronoiSup out;
  out.owner.setConstant(G.rows(), -1);
  out.sup_dist.setZero(X.n());
  for (int g = 0; g < G.rows(); ++g) {
    double best = std::numeric_limits<double>::infinity();
    int who = 0;
    for (int i = 0; i < T.rows(); ++i) {
      const double d2 = (T.row(i) - G.row(g)).squaredNorm();
      if (d2 < best) {
        best = d2;
        who = i;
      }
    }
    out.owner[g] = who;
    out.sup_dist[who] = std::max(out.sup_dist[who], std::sqrt(best));
  }
  return out;
}

UnionCellSup union_cell_sup_distances(const DesignMatrix& X,
                                      const Anisotropy& A1,
                                      const Anisotropy& A2,
                                      const CandidateGrid& grid) {
  check_dims(X, A1, grid);
  check_dims(X, A2, grid);
  const Eigen::MatrixXd T1 = transform_rows(X.pts, A1);
  const Eigen::MatrixXd T2 = transform_rows(X.pts, A2);
  const Eigen::MatrixXd G1 = transform_rows(grid.pts, A1);
  const Eigen::MatrixXd G2 = transform_rows(grid.pts, A2);
  UnionCellSup out;
  out.sup_d1.setZero(X.n());
  out.sup_d2.setZero(X.n());
  out.sup_euclid.setZero(X.n());
  for (int g = 0; g < grid.pts.rows(); ++g) {
    int own1 = 0, own2 = 0;
    double best1 = std::numeric_limits<double>::infinity();
    double best2 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < X.n(); ++i) {
      const double a = (T1.row(i) - G1.row(g)).squaredNorm();
      const double b = (T2.row(i) - G2.row(g)).squaredNorm();
      if (a < best1) { best1 = a; own1 = i; }
      if (b < best2) { best2 = b; own2 = i; }
    }
    for (const int i : {own1, own2}) {
      out.sup_d1[i] = std::max(out.sup_d1[i], (T1.row(i) - G1.row(g)).norm());
      out.sup_d2[i] = std::max(out.sup_d2[i], (T2.row(i) - G2.row(g)).norm());
      out.sup_euclid[i] =
          std::max(out.sup_euclid[i], (X.pts.row(i) - grid.pts.row(g)).norm());
    }
  }
  return out;
}

double star_discrepancy(const DesignMatrix& X) {
  const int n = X.n();
  const int d = X.d();
  if (n < 1) throw std::invalid_argument("star_discrepancy: empty design");
  X.require_in_unit_box(0.0);

  // Critical corner coordinates per axis: the point coordinates and 1.
  std::vector<std::vector<double>> axis(d);
  for (int j = 0; j < d; ++j) {
    axis[j].reserve(n + 1);
    for (int i = 0; i < n; ++i) axis[j].push_back(X.pts(i, j));
    axis[j].push_back(1.0);
    std::sort(axis[j].begin(), axis[j].end());
    axis[j].erase(std::unique(axis[j].begin(), axis[j].end()), axis[j].end());
  }

  std::vector<std::size_t> idx(d, 0);
  Eigen::VectorXd u(d);
  double disc = 0.0;
  for (;;) {
    double vol = 1.0;
    for (int j = 0; j < d; ++j) {
      u[j] = axis[j][idx[j]];
      vol *= u[j];
    }
    int open = 0, closed = 0;
    for (int i = 0; i < n; ++i) {
      bool in_open = true, in_closed = true;
      for (int j = 0; j < d; ++j) {
        const double c = X.pts(i, j);
        if (!(c < u[j])) in_open = false;
        if (!(c <= u[j])) in_closed = false;
        if (!in_open && !in_closed) break;
      }
      open += in_open;
      closed += in_closed;
    }
    disc = std::max(disc, static_cast<double>(closed) / n - vol);
    disc = std::max(disc, vol - static_cast<double>(open) / n);

    int j = 0;
    for (; j < d; ++j) {
      if (++idx[j] < axis[j].size()) break;
      idx[j] = 0;
    }
    if (j == d) break;
  }
  return disc;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    out.push_back(cell.substr(b));
  }
  return out;
}

bool parses_as_double(const std::string& s, double& v) {
  try {
    std::size_t pos = 0;
    v = std::stod(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

std::string format17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

DesignMatrix read_design_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open design file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    std::vector<double> row;
    row.reserve(cells.size());
    bool numeric = true;
    for (const auto& c : cells) {
      double v;
      if (!parses_as_double(c, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;  // header row
      }
      throw std::invalid_argument("non-numeric cell in design file: " + path);
    }
    first = false;
    if (!rows.empty() && rows.back().size() != row.size())
      throw std::invalid_argument("ragged rows in design file: " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("design file has no data rows: " + path);
  DesignMatrix X;
  X.pts.resize(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      X.pts(static_cast<int>(i), static_cast<int>(j)) = rows[i][j];
  X.require_in_unit_box(0.0);
  return X;
}

void write_design_csv(const std::string& path, const DesignMatrix& X) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write design file: " + path);
  for (int j = 0; j < X.d(); ++j) out << (j ? ",x" : "x") << (j + 1);
  out << "\n";
  for (int i = 0; i < X.n(); ++i) {
    for (int j = 0; j < X.d(); ++j) {
      if (j) out << ",";
      out << format17(X.pts(i, j));
    }
    out << "\n";
  }
}

Eigen::VectorXd read_observations_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open observations file: " + path);
  std::vector<double> vals;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 1)
      throw std::invalid_argument("observations file must have a single column: " + path);
    double v;
    if (!parses_as_double(cells[0], v)) {
      if (first) {
        first = false;
        continue;
      }
      throw std::invalid_argument("non-numeric observation in " + path);
    }
    first = false;
    vals.push_back(v);
  }
  if (vals.empty())
    throw std::invalid_argument("observations file has no data rows: " + path);
  return Eigen::Map<const Eigen::VectorXd>(vals.data(), static_cast<int>(vals.size()));
}

void write_observations_csv(const std::string& path, const Eigen::VectorXd& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write observations file: " + path);
  out << "f\n";
  for (int i = 0; i < f.size(); ++i) out << format17(f[i]) << "\n";
}

}  // namespace gpdex
