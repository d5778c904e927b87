#include "gpdex/bounds.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <vector>

#include "json.hpp"

namespace gpdex {

namespace {

// (sigma2 / k) (1 - y) (2k - 1 + y) with k = n phi(0) = n. Decreasing in y on
// [0, 1], so feeding a lower bound on the worst correlation keeps it valid.
double envelope(double y, int n, double sigma2) {
  const double k = static_cast<double>(n);
  return sigma2 / k * (1.0 - y) * (2.0 * k - 1.0 + y);
}

double bracket_coefficient(double c_star, int d) {
  const double gam = std::tgamma(d / 2.0 + 1.0);
  return gam * gam * M_PI / 18.0 * std::pow(12.0 / c_star, d + 1);
}

std::string format17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

TwoRegimeNominalConfig TwoRegimeNominalConfig::from_weights(const WeightModel& w) {
  return {w.lipschitz_w1(), w.lipschitz_w2()};
}

NominalBound nominal_bound(const DesignMatrix& X, const KernelSpec& spec,
                           const CandidateGrid& grid) {
  return nominal_bound(X, spec, grid, TwoRegimeNominalConfig::from_weights(spec.weights));
}

NominalBound nominal_bound(const DesignMatrix& X, const KernelSpec& spec,
                           const CandidateGrid& grid, const TwoRegimeNominalConfig& cfg) {
  spec.validate();
  NominalBound out;
  if (spec.variant == KernelSpec::Variant::Stationary) {
    out.fill = fill_distance(X, spec.anisotropy(), grid);
    out.argument = base_correlation(out.fill);
    out.bound = envelope(out.argument, X.n(), spec.sigma2);
    return out;
  }

  const UnionCellSup cells =
      union_cell_sup_distances(X, spec.anisotropy1(), spec.anisotropy2(), grid);
  const double reach = cells.sup_euclid.maxCoeff();
  const int n = X.n();
  out.per_point.resize(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = X.pts.row(i);
    out.per_point(i) = spec.weights.w1sq(xi) * base_correlation(cells.sup_d1(i)) +
                       spec.weights.w2sq(xi) * base_correlation(cells.sup_d2(i)) -
                       (cfg.k1 + cfg.k2) * reach;
  }
  const double m = out.per_point.minCoeff();
  out.truncated = m < 0.0;
  out.argument = std::max(0.0, m);
  out.bound = envelope(out.argument, n, spec.sigma2);
  return out;
}

RegressionBound regression_inflation_bound(const DesignMatrix& X,
                                           const KernelSpec& spec,
                                           const RegressionBasis& basis,
                                           const CandidateGrid& grid) {
  const int p = basis.p(X.d());
  if (p == 0) return {0.0, 0.0};

  const Eigen::MatrixXd H = basis.matrix(X, spec);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.transpose() * H);
  const double lam = es.eigenvalues()(0);
  // Relative rank test: an eigenvalue at roundoff scale of the largest one is
  // structural rank deficiency, and dividing by it would fabricate the bound.
  const double rank_tol =
      es.eigenvalues()(p - 1) * X.n() * std::numeric_limits<double>::epsilon();
  if (!(lam > rank_tol))
    throw std::invalid_argument("regression matrix is rank deficient; inflation bound undefined");

  const auto llt = factorize_spd(kernel_matrix(spec, X.pts, X.pts), "kernel matrix");
  const Eigen::MatrixXd W = llt.solve(H);  // Psi^{-1} H

  double sup = 0.0;
  for (Eigen::Index g = 0; g < grid.pts.rows(); ++g) {
    const Eigen::VectorXd x = grid.pts.row(g);
    const Eigen::VectorXd c1 =
        basis.eval(x, spec) - W.transpose() * kernel_vector(spec, X, x);
    sup = std::max(sup, c1.squaredNorm());
  }
  return {X.n() * spec.sigma2 * sup / lam, lam};
}

StabilitySummary numeric_g(const DesignMatrix& X, const KernelSpec& spec) {
  const Eigen::MatrixXd Psi = kernel_matrix(spec, X.pts, X.pts);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Psi);
  StabilitySummary s;
  s.lambda_min = es.eigenvalues()(0);
  s.lambda_max = es.eigenvalues()(X.n() - 1);
  const double inf = std::numeric_limits<double>::infinity();
  if (s.lambda_min > 0.0) {
    s.kappa = s.lambda_max / s.lambda_min;
    s.g = (s.kappa + 1.0) / s.lambda_min;
    s.g_gershgorin = (X.n() * spec.sigma2 / s.lambda_min + 1.0) / s.lambda_min;
  } else {
    s.kappa = inf;
    s.g = inf;
    s.g_gershgorin = inf;
  }
  return s;
}

RoundingBound numeric_error_bound(const Eigen::VectorXd& x0, const DesignMatrix& X,
                                  const KernelSpec& spec, const RegressionBasis& basis,
                                  const Eigen::VectorXd& f, const Eigen::VectorXd& beta,
                                  double delta) {
  const StabilitySummary s = numeric_g(X, spec);
  RoundingBound out;
  out.r = delta * s.kappa;
  if (!(out.r < 1.0) || !(s.lambda_min > 0.0)) {
    out.valid = false;
    out.bound = std::numeric_limits<double>::infinity();
    return out;
  }

  const int p = basis.p(X.d());
  double h_norm = 0.0, beta_norm = 0.0, columns_norm = 0.0;
  if (p > 0) {
    h_norm = basis.eval(x0, spec).norm();
    beta_norm = beta.norm();
    columns_norm = basis.matrix(X, spec).norm();  // sqrt of sum_j |h_j(X)|^2
  }
  const double psi_norm = kernel_vector(spec, X, x0).norm();
  out.bound = delta * h_norm * beta_norm +
              2.0 * delta / (1.0 - out.r) * psi_norm *
                  (f.norm() + beta_norm * columns_norm) * s.g;
  return out;
}

namespace {

// Shared body of the reported floor (coarsen = true) and the per-regime
// variant used as an optimization surface (coarsen = false).
LambdaMinBound eigen_floor(const DesignMatrix& X, const KernelSpec& spec,
                           const SpectralConfig& spectral, bool coarsen) {
  spec.validate();
  const int n = X.n();
  const int d = X.d();
  const double cs = spectral.c_star > 0.0 ? spectral.c_star : SpectralConfig::defaults(d).c_star;
  const double coef = bracket_coefficient(cs, d);

  LambdaMinBound out;
  out.per_point = Eigen::VectorXd::Zero(n);

  if (spec.variant == KernelSpec::Variant::Stationary) {
    const Separation sep = separation(X, spec.anisotropy());
    if (!(sep.q > 0.0)) {
      out.vacuous = true;
      return out;
    }
    const double ups = upsilon(cs / sep.q, d);
    for (int i = 0; i < n; ++i)
      out.per_point(i) = ups * (1.0 - coef * (sep.q / sep.qj(i)));
    out.bound = spec.sigma2 * out.per_point.minCoeff();
    return out;
  }

  double r_star = 0.0;
  if (coarsen) {
    // The coarsened floor is only available for proportional metrics: one
    // shared spectral mass has to cover both regimes' frequency windows.
    Eigen::MatrixXd ratio =
        spec.theta1.transpose().partialPivLu().solve(spec.theta2.transpose()).transpose();
    const double a = ratio.trace() / d;
    ratio.diagonal().array() -= a;
    if (!(a > 1.0) || ratio.norm() > 1e-8 * std::max(1.0, std::abs(a)))
      throw std::invalid_argument(
          "two-regime eigenvalue floor needs theta2 = a * theta1 with a > 1");
    r_star = cs / spec.anisotropy1().domain_diameter();
  }

  Eigen::MatrixXd ell(n, 2);
  for (int regime = 0; regime < 2; ++regime) {
    const Anisotropy A = regime == 0 ? spec.anisotropy1() : spec.anisotropy2();
    const Separation sep = separation(X, A);
    if (!(sep.q > 0.0)) {
      out.vacuous = true;
      return out;
    }
    const double ups =
        coarsen ? upsilon_coarse(cs / sep.q, r_star, d) : upsilon(cs / sep.q, d);
    for (int i = 0; i < n; ++i)
      ell(i, regime) = ups * (1.0 - coef * (sep.q / sep.qj(i)));
  }
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd xi = X.pts.row(i);
    out.per_point(i) = spec.weights.w1sq(xi) * ell(i, 0) + spec.weights.w2sq(xi) * ell(i, 1);
  }
  out.bound = spec.sigma2 * out.per_point.minCoeff();
  return out;
}

}  // namespace

LambdaMinBound lambda_min_lower_bound(const DesignMatrix& X, const KernelSpec& spec,
                                      const SpectralConfig& spectral) {
  return eigen_floor(X, spec, spectral, true);
}

LambdaMinBound lambda_min_lower_bound_per_regime(const DesignMatrix& X, const KernelSpec& spec,
                                                 const SpectralConfig& spectral) {
  return eigen_floor(X, spec, spectral, false);
}

MetricReport evaluate_all(const DesignMatrix& X, const KernelSpec& spec,
                          const RegressionBasis& basis, double delta,
                          const SpectralConfig& spectral, const CandidateGrid& grid) {
  const auto t0 = std::chrono::steady_clock::now();
  MetricReport rep;
  rep.n = X.n();
  rep.d = X.d();
  rep.grid_resolution = grid.resolution;
  rep.delta = delta;

  auto guard = [&rep](const std::string& field, auto&& fn) {
    try {
      fn();
    } catch (const std::exception& e) {
      rep.flags[field] = e.what();
    }
  };

  guard("input", [&] {
    spec.validate();
    X.require_in_unit_box(1e-12);
  });

  const bool two = spec.variant == KernelSpec::Variant::NonStationary;

  guard("fill", [&] {
    if (two) {
      rep.fill_regime1 = fill_distance(X, spec.anisotropy1(), grid);
      rep.fill_regime2 = fill_distance(X, spec.anisotropy2(), grid);
    } else {
      rep.fill = fill_distance(X, spec.anisotropy(), grid);
    }
  });
  guard("separation", [&] {
    const Separation s = separation(X, two ? spec.anisotropy1() : spec.anisotropy());
    rep.separation_q = s.q;
    rep.separation_qj = s.qj;
  });
  guard("star_discrepancy", [&] {
    const double cost = std::pow(rep.n + 1.0, rep.d) * rep.n * rep.d;
    if (cost > 2e8)
      throw std::runtime_error("skipped: exact evaluation cost grows as (n+1)^d");
    rep.star_disc = star_discrepancy(X);
  });

  StabilitySummary stab;
  bool have_stab = false;
  guard("spectrum", [&] {
    stab = numeric_g(X, spec);
    have_stab = true;
    rep.lambda_min = stab.lambda_min;
    rep.lambda_max = stab.lambda_max;
    rep.kappa = stab.kappa;
    rep.stability_g = stab.g;
    rep.stability_g_gershgorin = stab.g_gershgorin;
  });

  guard("nominal_bound", [&] {
    const NominalBound nb = nominal_bound(X, spec, grid);
    rep.nominal = nb.bound;
    rep.nominal_truncated = nb.truncated;
  });
  guard("regression_bound", [&] {
    rep.regression = regression_inflation_bound(X, spec, basis, grid).bound;
  });
  guard("rounding_bound", [&] {
    if (!have_stab) throw std::runtime_error("kernel matrix spectrum unavailable");
    rep.rounding_r = delta * stab.kappa;
    if (!(*rep.rounding_r < 1.0) || !(stab.lambda_min > 0.0)) {
      rep.rounding = std::numeric_limits<double>::infinity();
      throw std::runtime_error("delta * kappa reaches 1: rounding bound is infinite");
    }
    // No data exist at report time, so the data-dependent factors take their
    // a priori values: beta = 0 and |f| = sigma sqrt(n) (the root of
    // E |f|^2 under the assumed zero-mean process). What is left of the
    // x dependence is |psi(x)|, maximized over the grid.
    double sup_psi = 0.0;
    for (Eigen::Index g = 0; g < grid.pts.rows(); ++g)
      sup_psi = std::max(sup_psi, kernel_vector(spec, X, grid.pts.row(g)).norm());
    const double f_norm = std::sqrt(spec.sigma2 * rep.n);
    rep.rounding = 2.0 * delta / (1.0 - *rep.rounding_r) * sup_psi * f_norm * stab.g;
  });
  guard("lambda_min_bound", [&] {
    rep.lambda_floor = lambda_min_lower_bound(X, spec, spectral).bound;
  });
  guard("param_bound", [&] {
    const ParamCriterion pc = param_design_criterion(X, spec, basis, grid);
    rep.param_sup = pc.sup_bound;
    rep.param_exact_sup = pc.sup_exact;
    rep.param_s1 = pc.s1;
    rep.param_s2 = pc.s2;
  });

  rep.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
  return rep;
}

namespace {

void put(nlohmann::json& j, const char* key, const std::optional<double>& v) {
  if (v)
    j[key] = *v;
  else
    j[key] = nullptr;
}

}  // namespace

std::string MetricReport::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["d"] = d;
  j["grid_resolution"] = grid_resolution;
  j["delta"] = delta;
  put(j, "fill_distance", fill);
  put(j, "fill_regime1", fill_regime1);
  put(j, "fill_regime2", fill_regime2);
  put(j, "separation_q", separation_q);
  j["separation_qj"] =
      std::vector<double>(separation_qj.data(), separation_qj.data() + separation_qj.size());
  put(j, "star_discrepancy", star_disc);
  put(j, "lambda_min", lambda_min);
  put(j, "lambda_max", lambda_max);
  put(j, "kappa", kappa);
  put(j, "nominal_bound", nominal);
  j["nominal_truncated"] = nominal_truncated;
  put(j, "regression_bound", regression);
  put(j, "rounding_bound", rounding);
  put(j, "rounding_r", rounding_r);
  put(j, "stability_g", stability_g);
  put(j, "stability_g_gershgorin", stability_g_gershgorin);
  put(j, "lambda_min_bound", lambda_floor);
  put(j, "param_bound_sup", param_sup);
  put(j, "param_exact_sup", param_exact_sup);
  put(j, "param_s1", param_s1);
  put(j, "param_s2", param_s2);
  j["wall_ms"] = wall_ms;
  j["flags"] = flags;
  return j.dump(2) + "\n";
}

std::string MetricReport::csv_header() {
  return "n,d,grid_resolution,delta,fill_distance,fill_regime1,fill_regime2,separation_q,"
         "star_discrepancy,lambda_min,lambda_max,kappa,nominal_bound,nominal_truncated,"
         "regression_bound,rounding_bound,rounding_r,stability_g,stability_g_gershgorin,"
         "lambda_min_bound,param_bound_sup,param_exact_sup,param_s1,param_s2,wall_ms,flags";
}

std::string MetricReport::csv_row() const {
  std::ostringstream out;
  auto cell = [&out](const std::optional<double>& v) {
    out << ',';
    if (v) out << format17(*v);
  };
  out << n << ',' << d << ',' << grid_resolution << ',' << format17(delta);
  cell(fill);
  cell(fill_regime1);
  cell(fill_regime2);
  cell(separation_q);
  cell(star_disc);
  cell(lambda_min);
  cell(lambda_max);
  cell(kappa);
  cell(nominal);
  out << ',' << (nominal_truncated ? 1 : 0);
  cell(regression);
  cell(rounding);
  cell(rounding_r);
  cell(stability_g);
  cell(stability_g_gershgorin);
  cell(lambda_floor);
  cell(param_sup);
  cell(param_exact_sup);
  cell(param_s1);
  cell(param_s2);
  out << ',' << format17(wall_ms) << ',';
  std::string packed;
  for (const auto& [key, msg] : flags) {
    if (!packed.empty()) packed += "; ";
    packed += key + ": " + msg;
  }
  std::replace(packed.begin(), packed.end(), ',', ';');
  out << packed;
  return out.str();
}

}  // namespace gpdex
