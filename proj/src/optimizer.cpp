#include "gpdex/optimizer.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "gpdex/designgen.hpp"

namespace gpdex {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Evaluator = std::function<double(const DesignMatrix&)>;

Eigen::VectorXd flatten(const DesignMatrix& X) {
  return Eigen::Map<const Eigen::VectorXd>(X.pts.data(), X.pts.size());
}

DesignMatrix unflatten(const Eigen::VectorXd& z, int n, int d) {
  return DesignMatrix(Eigen::Map<const Eigen::MatrixXd>(z.data(), n, d));
}

double box_penalty(const Eigen::VectorXd& z) {
  double pen = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    if (z(i) < 0.0)
      pen += z(i) * z(i);
    else if (z(i) > 1.0)
      pen += (z(i) - 1.0) * (z(i) - 1.0);
  }
  return pen;
}

DesignMatrix clipped(const Eigen::VectorXd& z, int n, int d) {
  Eigen::VectorXd c = z.cwiseMax(0.0).cwiseMin(1.0);
  return unflatten(c, n, d);
}

// Standard reflect / expand / contract / shrink simplex over the flattened
// coordinates; the objective sees raw (possibly out-of-box) designs plus a
// quadratic penalty, so no feasibility projection happens during the search.
OptimResult nm_core(const Evaluator& f, const DesignMatrix& start, const NmConfig& cfg,
                    long eval_offset, std::vector<TracePoint>& trace) {
  const int n = start.n(), d = start.d();
  const int dim = n * d;
  long evals = 0;
  auto score = [&](const Eigen::VectorXd& z) {
    ++evals;
    return f(unflatten(z, n, d)) + cfg.penalty_coeff * box_penalty(z);
  };

  std::vector<Eigen::VectorXd> v(dim + 1);
  std::vector<double> fv(dim + 1);
  v[0] = flatten(start);
  fv[0] = score(v[0]);
  for (int i = 1; i <= dim; ++i) {
    v[i] = v[0];
    v[i](i - 1) += cfg.init_spread;
    fv[i] = score(v[i]);
  }

  std::vector<int> idx(dim + 1);
  double best_seen = kInf;
  bool converged = false;
  while (evals < cfg.max_evals) {
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = idx[0], second_worst = idx[dim - 1], worst = idx[dim];

    double diam = 0.0;
    for (int i = 1; i <= dim; ++i)
      diam = std::max(diam, (v[idx[i]] - v[best]).cwiseAbs().maxCoeff());
    if (fv[best] < best_seen) {
      best_seen = fv[best];
      trace.push_back({eval_offset + evals, fv[best], diam});
    }
    const double spread = fv[worst] - fv[best];
    if (diam < cfg.tol_diam && spread < cfg.tol_spread) {
      converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i <= dim; ++i)
      if (i != worst) centroid += v[i];
    centroid /= dim;

    const Eigen::VectorXd dir = centroid - v[worst];
    Eigen::VectorXd xr = centroid + dir;
    const double fr = score(xr);
    if (fr < fv[best]) {
      Eigen::VectorXd xe = centroid + 2.0 * dir;
      const double fe = score(xe);
      if (fe < fr) {
        v[worst] = std::move(xe);
        fv[worst] = fe;
      } else {
        v[worst] = std::move(xr);
        fv[worst] = fr;
      }
    } else if (fr < fv[second_worst]) {
      v[worst] = std::move(xr);
      fv[worst] = fr;
    } else {
      const bool outside = fr < fv[worst];
      Eigen::VectorXd xc = centroid + (outside ? 0.5 : -0.5) * dir;
      const double fc = score(xc);
      if ((outside && fc <= fr) || (!outside && fc < fv[worst])) {
        v[worst] = std::move(xc);
        fv[worst] = fc;
      } else {
        for (int i = 0; i <= dim; ++i) {
          if (i == best) continue;
          v[i] = v[best] + 0.5 * (v[i] - v[best]);
          fv[i] = score(v[i]);
        }
      }
    }
  }

  int best = 0;
  for (int i = 1; i <= dim; ++i)
    if (fv[i] < fv[best]) best = i;

  OptimResult out;
  out.design = clipped(v[best], n, d);
  out.value = f(out.design);
  out.evals = evals;
  out.converged = converged;
  return out;
}

}  // namespace

ObjectiveKind objective_kind_from_string(const std::string& name) {
  if (name == "nominal-sup") return ObjectiveKind::NominalSup;
  if (name == "nominal-two-regime") return ObjectiveKind::NominalTwoRegime;
  if (name == "numeric-floor") return ObjectiveKind::NumericFloor;
  if (name == "numeric-floor-two-regime") return ObjectiveKind::NumericFloorTwoRegime;
  if (name == "param-sup") return ObjectiveKind::ParamBoundSup;
  throw std::invalid_argument("unknown objective: " + name);
}

std::string to_string(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::NominalSup: return "nominal-sup";
    case ObjectiveKind::NominalTwoRegime: return "nominal-two-regime";
    case ObjectiveKind::NumericFloor: return "numeric-floor";
    case ObjectiveKind::NumericFloorTwoRegime: return "numeric-floor-two-regime";
    case ObjectiveKind::ParamBoundSup: return "param-sup";
    case ObjectiveKind::Custom: return "custom";
  }
  throw std::invalid_argument("unknown objective kind");
}

double Objective::operator()(const DesignMatrix& X) const {
  const bool needs_grid = kind == ObjectiveKind::NominalSup ||
                          kind == ObjectiveKind::NominalTwoRegime ||
                          kind == ObjectiveKind::ParamBoundSup;
  if (needs_grid && grid.pts.rows() == 0)
    throw std::invalid_argument("objective needs a candidate grid");
  try {
    switch (kind) {
      case ObjectiveKind::NominalSup: {
        double v = nominal_bound(X, spec, grid).bound;
        if (basis.p(X.d()) > 0) v += regression_inflation_bound(X, spec, basis, grid).bound;
        return v;
      }
      case ObjectiveKind::NominalTwoRegime: {
        const TwoRegimeNominalConfig c = (two_regime.k1 == 0.0 && two_regime.k2 == 0.0)
                                         ? TwoRegimeNominalConfig::from_weights(spec.weights)
                                         : two_regime;
        return nominal_bound(X, spec, grid, c).bound;
      }
      case ObjectiveKind::NumericFloor: {
        // the stationary floor is monotone in the separation radius, so the
        // search maximizes the radius itself (as a negative); this stays
        // informative even where the floor underflows to zero
        const Anisotropy A = spec.variant == KernelSpec::Variant::Stationary
                                 ? spec.anisotropy()
                                 : spec.anisotropy1();
        return -separation(X, A).q;
      }
      case ObjectiveKind::NumericFloorTwoRegime:
        // the reported two-regime floor coarsens both regimes to a shared
        // frequency window and is locally constant in the design once every
        // separation clears that window; the per-regime variant is an equally
        // valid floor that stays responsive, so it is the search surface
        return -lambda_min_lower_bound_per_regime(X, spec, spectral).bound;
      case ObjectiveKind::ParamBoundSup:
        return param_design_criterion(X, spec, basis, grid).sup_total;
      case ObjectiveKind::Custom:
        if (!custom) throw std::invalid_argument("custom objective not set");
        return custom(X);
    }
  } catch (const FactorizationError&) {
    return kInf;
  } catch (const std::runtime_error&) {
    return kInf;
  }
  throw std::invalid_argument("unknown objective kind");
}

Objective Objective::make(ObjectiveKind kind, KernelSpec spec, RegressionBasis basis,
                          CandidateGrid grid) {
  Objective o;
  o.kind = kind;
  o.spec = std::move(spec);
  o.basis = std::move(basis);
  o.grid = std::move(grid);
  if (o.spec.variant == KernelSpec::Variant::NonStationary)
    o.two_regime = TwoRegimeNominalConfig::from_weights(o.spec.weights);
  o.spectral = SpectralConfig::defaults(o.spec.d());
  return o;
}

OptimResult nelder_mead(const Objective& objective, const DesignMatrix& start,
                        const NmConfig& cfg) {
  std::vector<TracePoint> trace;
  OptimResult out = nm_core([&](const DesignMatrix& X) { return objective(X); }, start,
                            cfg, 0, trace);
  out.trace = std::move(trace);
  return out;
}

OptimResult homotopy_optimize(const Objective& source, const Objective& target,
                              const DesignMatrix& start, const HomotopyConfig& cfg) {
  if (cfg.stages < 1) throw std::invalid_argument("homotopy needs at least one stage");
  std::vector<TracePoint> trace;
  DesignMatrix current = start;
  OptimResult stage_result;
  long total_evals = 0;
  for (int k = 1; k <= cfg.stages; ++k) {
    const double lam = static_cast<double>(k) / cfg.stages;
    Evaluator blend;
    if (k == cfg.stages) {
      blend = [&](const DesignMatrix& X) { return target(X); };
    } else {
      blend = [&, lam](const DesignMatrix& X) {
        return (1.0 - lam) * source(X) + lam * target(X);
      };
    }
    stage_result = nm_core(blend, current, cfg.nm, total_evals, trace);
    total_evals += stage_result.evals;
    current = stage_result.design;
  }
  stage_result.evals = total_evals;
  stage_result.trace = std::move(trace);
  return stage_result;
}

double nn_distance_cv(const DesignMatrix& X) {
  const int n = X.n();
  if (n < 2) return 0.0;
  Eigen::VectorXd nn(n);
  for (int i = 0; i < n; ++i) {
    double m = kInf;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      m = std::min(m, (X.pts.row(i) - X.pts.row(j)).norm());
    }
    nn(i) = m;
  }
  const double mean = nn.mean();
  if (!(mean > 0.0)) return kInf;
  const double var = (nn.array() - mean).square().mean();
  return std::sqrt(var) / mean;
}

double mean_corner_distance(const DesignMatrix& X) {
  const int d = X.d();
  const int corners = 1 << d;
  double acc = 0.0;
  Eigen::VectorXd corner(d);
  for (int mask = 0; mask < corners; ++mask) {
    for (int j = 0; j < d; ++j) corner(j) = (mask >> j) & 1 ? 1.0 : 0.0;
    double m = kInf;
    for (int i = 0; i < X.n(); ++i)
      m = std::min(m, (X.pts.row(i).transpose() - corner).norm());
    acc += m;
  }
  return acc / corners;
}

std::pair<double, double> halfspace_mean_qj(const DesignMatrix& X) {
  const Separation s = separation(X, Anisotropy::isotropic(X.d(), 1.0));
  double sum_left = 0.0, sum_right = 0.0;
  int n_left = 0, n_right = 0;
  for (int i = 0; i < X.n(); ++i) {
    if (X.pts(i, 0) < 0.5) {
      sum_left += s.qj(i);
      ++n_left;
    } else {
      sum_right += s.qj(i);
      ++n_right;
    }
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return {n_left ? sum_left / n_left : nan, n_right ? sum_right / n_right : nan};
}

std::vector<std::string> figure_names() {
  return {"fig1-left", "fig1-middle", "fig1-right", "fig2-left",
          "fig2-right", "fig3-left", "fig3-right"};
}

FigureResult reproduce_figure(const std::string& name, std::uint64_t seed,
                              long budget_override) {
  const int n = 23, d = 2;
  // every preset starts from the fill-scaled triangular lattice; the numeric
  // presets rescale it for separation instead
  DesignMatrix start = generate_design(DesignFamily::TriangularLattice, n, d, seed);
  if (name == "fig2-left" || name == "fig2-right")
    start = scale_to_objective(start, ScaleObjective::MaxSeparation,
                               Anisotropy::isotropic(d, 40.0), CandidateGrid{})
                .design;
  auto iso = [](double c) { return KernelSpec::stationary_iso(1.0, 2, c); };
  auto grid = [](int res) { return CandidateGrid::regular(2, res); };

  FigureResult fig;
  fig.name = name;

  NmConfig nm;
  auto budget = [&](long def) { nm.max_evals = budget_override > 0 ? budget_override : def; };

  if (name == "fig1-left") {
    const Objective target =
        Objective::make(ObjectiveKind::NominalSup, iso(1.0), RegressionBasis::none(), grid(41));
    budget(20000);
    fig.spec = target.spec;
    fig.result = nelder_mead(target, start, nm);
  } else if (name == "fig1-middle") {
    const Objective source =
        Objective::make(ObjectiveKind::NominalSup, iso(1.0), RegressionBasis::none(), grid(33));
    WeightModel w;  // quadratic
    const Objective target = Objective::make(
        ObjectiveKind::NominalTwoRegime,
        KernelSpec::two_regime(1.0, Eigen::MatrixXd::Identity(2, 2),
                               10.0 * Eigen::MatrixXd::Identity(2, 2), w),
        RegressionBasis::none(), grid(33));
    budget(2500);
    HomotopyConfig h;
    h.nm = nm;
    fig.spec = target.spec;
    fig.result = homotopy_optimize(source, target, start, h);
  } else if (name == "fig1-right") {
    const Objective source =
        Objective::make(ObjectiveKind::NominalSup, iso(2.0), RegressionBasis::none(), grid(33));
    const Objective target = Objective::make(ObjectiveKind::NominalSup, iso(2.0),
                                             RegressionBasis::constant_linear(), grid(33));
    budget(2500);
    HomotopyConfig h;
    h.nm = nm;
    fig.spec = target.spec;
    fig.result = homotopy_optimize(source, target, start, h);
  } else if (name == "fig2-left") {
    const Objective target = Objective::make(ObjectiveKind::NumericFloor, iso(40.0),
                                             RegressionBasis::none(), CandidateGrid{});
    budget(20000);
    fig.spec = target.spec;
    fig.result = nelder_mead(target, start, nm);
  } else if (name == "fig2-right") {
    const Objective source = Objective::make(ObjectiveKind::NumericFloor, iso(40.0),
                                             RegressionBasis::none(), CandidateGrid{});
    WeightModel w;
    w.kind = WeightModel::Kind::Logistic;
    w.slope = 25.0;
    w.center = 0.5;
    const Objective target = Objective::make(
        ObjectiveKind::NumericFloorTwoRegime,
        KernelSpec::two_regime(1.0, 40.0 * Eigen::MatrixXd::Identity(2, 2),
                               100.0 * Eigen::MatrixXd::Identity(2, 2), w),
        RegressionBasis::none(), CandidateGrid{});
    budget(2500);
    HomotopyConfig h;
    h.nm = nm;
    fig.spec = target.spec;
    fig.result = homotopy_optimize(source, target, start, h);
  } else if (name == "fig3-left") {
    const KernelSpec spec = iso(3.0);
    Objective target;
    target.kind = ObjectiveKind::Custom;
    target.spec = spec;
    target.custom = [spec](const DesignMatrix& X) {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(param_jacobian_gram(X, spec));
      return -es.eigenvalues()(0);
    };
    budget(15000);
    fig.spec = spec;
    fig.result = nelder_mead(target, start, nm);
  } else if (name == "fig3-right") {
    const Objective target = Objective::make(ObjectiveKind::ParamBoundSup, iso(3.0),
                                             RegressionBasis::constant(), grid(21));
    budget(8000);
    fig.spec = target.spec;
    fig.result = nelder_mead(target, start, nm);
  } else {
    throw std::invalid_argument("unknown figure preset: " + name);
  }

  fig.nn_cv = nn_distance_cv(fig.result.design);
  fig.mean_corner_dist = mean_corner_distance(fig.result.design);
  std::tie(fig.qj_mean_left, fig.qj_mean_right) = halfspace_mean_qj(fig.result.design);
  return fig;
}

}  // namespace gpdex
