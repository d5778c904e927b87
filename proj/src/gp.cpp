#include "gpdex/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace gpdex {

namespace {

// Correlation matrix under diagonal length-scales (variance stripped).
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& P, const Eigen::VectorXd& rho) {
  const Eigen::MatrixXd T = P * rho.asDiagonal();
  Eigen::MatrixXd Phi(P.rows(), P.rows());
  for (int i = 0; i < P.rows(); ++i) {
    Phi(i, i) = 1.0;
    for (int j = 0; j < i; ++j) {
      const double v = std::exp(-(T.row(i) - T.row(j)).squaredNorm());
      Phi(i, j) = v;
      Phi(j, i) = v;
    }
  }
  return Phi;
}

// Per-component derivative of the correlation matrix in rho_k.
std::vector<Eigen::MatrixXd> correlation_grads(const Eigen::MatrixXd& P,
                                               const Eigen::VectorXd& rho,
                                               const Eigen::MatrixXd& Phi) {
  const int n = static_cast<int>(P.rows());
  const int d = static_cast<int>(rho.size());
  std::vector<Eigen::MatrixXd> G(d, Eigen::MatrixXd::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j)
      for (int k = 0; k < d; ++k) {
        const double delta = P(i, k) - P(j, k);
        const double v = -2.0 * rho[k] * delta * delta * Phi(i, j);
        G[k](i, j) = v;
        G[k](j, i) = v;
      }
  return G;
}

double log_det_from_llt(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

int RegressionBasis::p(int d) const {
  switch (kind) {
    case Kind::None: return 0;
    case Kind::Constant: return 1;
    case Kind::ConstantLinear: return d + 1;
    case Kind::KernelCenters: return static_cast<int>(centers.rows());
  }
  return 0;
}

Eigen::VectorXd RegressionBasis::eval(const Eigen::VectorXd& x, const KernelSpec& spec) const {
  switch (kind) {
    case Kind::None:
      return Eigen::VectorXd();
    case Kind::Constant: {
      Eigen::VectorXd h(1);
      h[0] = 1.0;
      return h;
    }
    case Kind::ConstantLinear: {
      Eigen::VectorXd h(x.size() + 1);
      h[0] = 1.0;
      h.tail(x.size()) = x;
      return h;
    }
    case Kind::KernelCenters: {
      Eigen::VectorXd h(centers.rows());
      for (int j = 0; j < centers.rows(); ++j)
        h[j] = kernel_value(spec, centers.row(j).transpose(), x);
      return h;
    }
  }
  return Eigen::VectorXd();
}

Eigen::MatrixXd RegressionBasis::matrix(const DesignMatrix& X, const KernelSpec& spec) const {
  const int pp = p(X.d());
  Eigen::MatrixXd H(X.n(), pp);
  for (int i = 0; i < X.n(); ++i)
    H.row(i) = eval(X.pts.row(i).transpose(), spec).transpose();
  return H;
}

RegressionBasis RegressionBasis::constant() {
  RegressionBasis b;
  b.kind = Kind::Constant;
  return b;
}
RegressionBasis RegressionBasis::constant_linear() {
  RegressionBasis b;
  b.kind = Kind::ConstantLinear;
  return b;
}
RegressionBasis RegressionBasis::kernel_centers(Eigen::MatrixXd centers) {
  RegressionBasis b;
  b.kind = Kind::KernelCenters;
  b.centers = std::move(centers);
  return b;
}

Eigen::LLT<Eigen::MatrixXd> factorize_spd(const Eigen::MatrixXd& K,
                                          const std::string& context) {
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K, Eigen::EigenvaluesOnly);
    std::ostringstream os;
    os << context << ": matrix is not numerically positive definite";
    if (es.info() == Eigen::Success) {
      const double lo = es.eigenvalues().minCoeff();
      const double hi = es.eigenvalues().maxCoeff();
      os << " (eigenvalue range [" << lo << ", " << hi
         << "], condition estimate " << hi / std::max(lo, 1e-300) << ")";
    }
    throw FactorizationError(os.str());
  }
  return llt;
}

Eigen::VectorXd gls_beta(const DesignMatrix& X, const Eigen::VectorXd& f,
                         const KernelSpec& spec, const RegressionBasis& basis) {
  const int pp = basis.p(X.d());
  if (pp == 0) return Eigen::VectorXd();
  const Eigen::MatrixXd H = basis.matrix(X, spec);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(H);
  if (qr.rank() < pp)
    throw std::invalid_argument("regression matrix is rank deficient on this design");
  const Eigen::MatrixXd Psi = kernel_matrix(spec, X.pts, X.pts);
  const auto llt = factorize_spd(Psi, "gls_beta");
  const Eigen::MatrixXd W = llt.solve(H);
  const Eigen::MatrixXd A = H.transpose() * W;
  return A.ldlt().solve(W.transpose() * f);
}

FittedGp fit_gp(const DesignMatrix& X, const Eigen::VectorXd& f,
                const KernelSpec& spec, const RegressionBasis& basis) {
  if (f.size() != X.n())
    throw std::invalid_argument("observations and design sizes disagree");
  spec.validate();
  FittedGp m;
  m.X = X;
  m.spec = spec;
  m.basis = basis;
  m.f = f;
  const Eigen::MatrixXd Psi = kernel_matrix(spec, X.pts, X.pts);
  m.llt = factorize_spd(Psi, "fit_gp");
  m.H = basis.matrix(X, spec);
  const int pp = m.p();
  if (pp > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m.H);
    if (qr.rank() < pp)
      throw std::invalid_argument("regression matrix is rank deficient on this design");
    const Eigen::MatrixXd W = m.llt.solve(m.H);
    const Eigen::MatrixXd A = m.H.transpose() * W;
    m.beta = A.ldlt().solve(W.transpose() * f);
    m.alpha = m.llt.solve(f - m.H * m.beta);
  } else {
    m.alpha = m.llt.solve(f);
  }

  // Fixed probe vectors; diagnostics only.
  const int n = X.n();
  Eigen::VectorXd b1(n), b2(n);
  for (int i = 0; i < n; ++i) {
    b1[i] = static_cast<double>(i + 1);
    b2[i] = (i % 2 == 0) ? 1.0 : -1.0;
  }
  for (const auto& b : {b1, b2}) {
    const double rel = (Psi * m.llt.solve(b) - b).norm() / b.norm();
    m.probe_rel_residual = std::max(m.probe_rel_residual, rel);
  }
  Eigen::VectorXd recon = Psi * m.alpha;
  if (pp > 0) recon += m.H * m.beta;
  const double scale = std::max(f.cwiseAbs().maxCoeff(), 1e-30);
  m.interp_rel_error = (recon - f).cwiseAbs().maxCoeff() / scale;
  return m;
}

double blup_predict(const FittedGp& model, const Eigen::VectorXd& x) {
  const Eigen::VectorXd psi = kernel_vector(model.spec, model.X, x);
  double val = psi.dot(model.alpha);
  if (model.p() > 0)
    val += model.basis.eval(x, model.spec).dot(model.beta);
  return val;
}

double mspe(const DesignMatrix& X, const KernelSpec& spec,
            const RegressionBasis& basis, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd Psi = kernel_matrix(spec, X.pts, X.pts);
  const auto llt = factorize_spd(Psi, "mspe");
  const Eigen::VectorXd psi = kernel_vector(spec, X, x);
  const Eigen::VectorXd w = llt.solve(psi);
  double val = kernel_value(spec, x, x) - psi.dot(w);
  const int pp = basis.p(X.d());
  if (pp > 0) {
    const Eigen::MatrixXd H = basis.matrix(X, spec);
    const Eigen::MatrixXd W = llt.solve(H);
    const Eigen::MatrixXd A = H.transpose() * W;
    const Eigen::VectorXd c1 = basis.eval(x, spec) - W.transpose() * psi;
    val += c1.dot(A.ldlt().solve(c1));
  }
  return val;
}

double mspe_bordered(const DesignMatrix& X, const KernelSpec& spec,
                     const RegressionBasis& basis, const Eigen::VectorXd& x) {
  const int n = X.n();
  const int pp = basis.p(X.d());
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n + pp, n + pp);
  const Eigen::MatrixXd H = basis.matrix(X, spec);
  B.topRightCorner(pp, n) = H.transpose();
  B.bottomLeftCorner(n, pp) = H;
  B.bottomRightCorner(n, n) = kernel_matrix(spec, X.pts, X.pts);
  Eigen::VectorXd rhs(n + pp);
  rhs.head(pp) = basis.eval(x, spec);
  rhs.tail(n) = kernel_vector(spec, X, x);
  const Eigen::VectorXd sol = B.fullPivLu().solve(rhs);
  return kernel_value(spec, x, x) - rhs.dot(sol);
}

double log_likelihood(const DesignMatrix& X, const Eigen::VectorXd& f,
                      const KernelSpec& spec, const Eigen::VectorXd& beta,
                      const RegressionBasis& basis) {
  const Eigen::MatrixXd Psi = kernel_matrix(spec, X.pts, X.pts);
  const auto llt = factorize_spd(Psi, "log_likelihood");
  Eigen::VectorXd delta = f;
  if (basis.p(X.d()) > 0) delta -= basis.matrix(X, spec) * beta;
  return -0.5 * log_det_from_llt(llt) - 0.5 * delta.dot(llt.solve(delta));
}

GpScore score_vector(const DesignMatrix& X, const Eigen::VectorXd& f,
                     const KernelSpec& spec, const Eigen::VectorXd& beta,
                     const RegressionBasis& basis) {
  const Eigen::VectorXd rho = spec.rho();
  const double s2 = spec.sigma2;
  const int n = X.n();
  const int d = X.d();
  const Eigen::MatrixXd Phi = correlation_matrix(X.pts, rho);
  const auto llt = factorize_spd(Phi, "score_vector");
  const Eigen::MatrixXd PhiInv = llt.solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::VectorXd delta = f;
  const int pp = basis.p(d);
  if (pp > 0) delta -= basis.matrix(X, spec) * beta;
  const Eigen::VectorXd phi_inv_delta = llt.solve(delta);

  GpScore s;
  if (pp > 0)
    s.beta_block = basis.matrix(X, spec).transpose() * phi_inv_delta / s2;
  else
    s.beta_block = Eigen::VectorXd();
  s.sigma2_block = -n / (2.0 * s2) + delta.dot(phi_inv_delta) / (2.0 * s2 * s2);

  // Length-scale score: -(1/2) tr(Phi^{-1} G_k) + (1/2) delta' Phi^{-1} G_k
  // Phi^{-1} delta / sigma2 (the trace term is scale free).
  const auto G = correlation_grads(X.pts, rho, Phi);
  s.rho_block.resize(d);
  for (int k = 0; k < d; ++k) {
    const double tr = PhiInv.cwiseProduct(G[k]).sum();
    const double quad = phi_inv_delta.dot(G[k] * phi_inv_delta);
    s.rho_block[k] = -0.5 * tr + 0.5 * quad / s2;
  }
  return s;
}

FisherBlocks fisher_blocks(const DesignMatrix& X, const KernelSpec& spec,
                           const RegressionBasis& basis) {
  const Eigen::VectorXd rho = spec.rho();
  const double s2 = spec.sigma2;
  const int n = X.n();
  const int d = X.d();
  const Eigen::MatrixXd Phi = correlation_matrix(X.pts, rho);
  const auto llt = factorize_spd(Phi, "fisher_blocks");
  const Eigen::MatrixXd PhiInv = llt.solve(Eigen::MatrixXd::Identity(n, n));

  FisherBlocks blocks;
  const int pp = basis.p(d);
  if (pp > 0) {
    const Eigen::MatrixXd H = basis.matrix(X, spec);
    blocks.I11 = H.transpose() * llt.solve(H) / s2;
  } else {
    blocks.I11.resize(0, 0);
  }
  blocks.I22 = n / (2.0 * s2 * s2);

  const auto G = correlation_grads(X.pts, rho, Phi);
  blocks.I32.resize(d);
  blocks.I33.resize(d, d);
  std::vector<Eigen::MatrixXd> A(d);
  for (int k = 0; k < d; ++k) {
    blocks.I32[k] = PhiInv.cwiseProduct(G[k]).sum() / (2.0 * s2);
    A[k] = PhiInv * G[k];
  }
  for (int k = 0; k < d; ++k)
    for (int l = 0; l <= k; ++l) {
      const double v = 0.5 * A[k].cwiseProduct(A[l].transpose()).sum();
      blocks.I33(k, l) = v;
      blocks.I33(l, k) = v;
    }
  return blocks;
}

Eigen::MatrixXd dense_param_jacobian(const DesignMatrix& X, const KernelSpec& spec) {
  const Eigen::VectorXd rho = spec.rho();
  const int n = X.n();
  const int d = X.d();
  const Eigen::MatrixXd Phi = correlation_matrix(X.pts, rho);
  const auto G = correlation_grads(X.pts, rho, Phi);
  Eigen::MatrixXd C(static_cast<long>(n) * n, d);
  for (int k = 0; k < d; ++k) {
    const Eigen::MatrixXd dPsi = spec.sigma2 * G[k];
    C.col(k) = Eigen::Map<const Eigen::VectorXd>(dPsi.data(), static_cast<long>(n) * n);
  }
  return C;
}

Eigen::MatrixXd param_jacobian_gram(const DesignMatrix& X, const KernelSpec& spec) {
  const Eigen::VectorXd rho = spec.rho();
  const int n = X.n();
  const int d = X.d();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd g(d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Eigen::VectorXd delta = X.pts.row(i) - X.pts.row(j);
      const double corr = std::exp(-(rho.array() * delta.array()).square().sum());
      for (int k = 0; k < d; ++k)
        g[k] = spec.sigma2 * -2.0 * rho[k] * delta[k] * delta[k] * corr;
      gram.noalias() += g * g.transpose();
    }
  return gram;
}

namespace {

// Deterministic simplex search used only for the profile likelihood; the
// design optimizer has its own full implementation.
struct SimplexOut {
  Eigen::VectorXd x;
  double value = 0.0;
  long evals = 0;
  bool converged = false;
};

template <class F>
SimplexOut simplex_minimize(F&& fn, const Eigen::VectorXd& x0, double spread,
                            long max_evals, double tol) {
  const int m = static_cast<int>(x0.size());
  std::vector<Eigen::VectorXd> S(m + 1, x0);
  for (int i = 0; i < m; ++i) S[i + 1][i] += spread;
  std::vector<double> F_(m + 1);
  long evals = 0;
  for (int i = 0; i <= m; ++i) {
    F_[i] = fn(S[i]);
    ++evals;
  }
  SimplexOut out;
  bool converged = false;
  while (evals < max_evals) {
    std::vector<int> ord(m + 1);
    std::iota(ord.begin(), ord.end(), 0);
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return F_[a] < F_[b]; });
    std::vector<Eigen::VectorXd> S2(m + 1);
    std::vector<double> F2(m + 1);
    for (int i = 0; i <= m; ++i) {
      S2[i] = S[ord[i]];
      F2[i] = F_[ord[i]];
    }
    S = std::move(S2);
    F_ = std::move(F2);
    double diam = 0.0;
    for (int i = 1; i <= m; ++i) diam = std::max(diam, (S[i] - S[0]).norm());
    if (diam < tol || std::abs(F_[m] - F_[0]) < 1e-12) {
      converged = true;
      break;
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(m);
    for (int i = 0; i < m; ++i) c += S[i];
    c /= m;
    const Eigen::VectorXd xr = c + (c - S[m]);
    const double fr = fn(xr);
    ++evals;
    if (fr < F_[0]) {
      const Eigen::VectorXd xe = c + 2.0 * (c - S[m]);
      const double fe = fn(xe);
      ++evals;
      if (fe < fr) {
        S[m] = xe;
        F_[m] = fe;
      } else {
        S[m] = xr;
        F_[m] = fr;
      }
    } else if (fr < F_[m - 1]) {
      S[m] = xr;
      F_[m] = fr;
    } else {
      const Eigen::VectorXd xc = c + 0.5 * (S[m] - c);
      const double fc = fn(xc);
      ++evals;
      if (fc < F_[m]) {
        S[m] = xc;
        F_[m] = fc;
      } else {
        for (int i = 1; i <= m; ++i) {
          S[i] = S[0] + 0.5 * (S[i] - S[0]);
          F_[i] = fn(S[i]);
          ++evals;
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= m; ++i)
    if (F_[i] < F_[best]) best = i;
  out.x = S[best];
  out.value = F_[best];
  out.evals = evals;
  out.converged = converged;
  return out;
}

}  // namespace

MleResult mle_fit(const DesignMatrix& X, const Eigen::VectorXd& f,
                  const KernelSpec& start, const RegressionBasis& basis,
                  const MleOptions& opts) {
  const Eigen::VectorXd rho0 = start.rho();
  const int n = X.n();
  const int d = X.d();
  const int pp = basis.p(d);
  const double big = 1e9;

  // Concentrated negative log likelihood in the log length-scales.
  auto negprof = [&](const Eigen::VectorXd& z) -> double {
    Eigen::VectorXd rho = z.array().exp();
    for (int k = 0; k < d; ++k)
      if (!(rho[k] >= opts.rho_min && rho[k] <= opts.rho_max)) return big;
    const Eigen::MatrixXd Phi = correlation_matrix(X.pts, rho);
    Eigen::LLT<Eigen::MatrixXd> llt(Phi);
    if (llt.info() != Eigen::Success) return big;
    Eigen::VectorXd delta = f;
    if (pp > 0) {
      KernelSpec s = KernelSpec::stationary(1.0, rho.asDiagonal());
      const Eigen::MatrixXd H = basis.matrix(X, s);
      const Eigen::MatrixXd W = llt.solve(H);
      const Eigen::VectorXd beta =
          (H.transpose() * W).ldlt().solve(W.transpose() * f);
      delta -= H * beta;
    }
    const double quad = delta.dot(llt.solve(delta));
    const double s2hat = quad / n;
    if (!(s2hat > 0.0) || !std::isfinite(s2hat)) return big;
    return 0.5 * (n * std::log(s2hat) + log_det_from_llt(llt));
  };

  Eigen::VectorXd rho_hat = rho0;
  long evals = 0;
  bool converged = true;
  if (!opts.fix_rho) {
    const Eigen::VectorXd z0 = rho0.array().log();
    if (negprof(z0) >= big)
      throw std::runtime_error(
          "mle_fit: likelihood is not finite at the starting length-scales");
    const auto out = simplex_minimize(negprof, z0, 0.5, opts.max_evals, 1e-8);
    rho_hat = out.x.array().exp();
    evals = out.evals;
    converged = out.converged;
  }

  // Closed-form variance (and trend) at the chosen length-scales.
  const Eigen::MatrixXd Phi = correlation_matrix(X.pts, rho_hat);
  const auto llt = factorize_spd(Phi, "mle_fit");
  KernelSpec unit = KernelSpec::stationary(1.0, rho_hat.asDiagonal());
  Eigen::VectorXd delta = f;
  if (pp > 0) {
    const Eigen::MatrixXd H = basis.matrix(X, unit);
    const Eigen::MatrixXd W = llt.solve(H);
    const Eigen::VectorXd beta = (H.transpose() * W).ldlt().solve(W.transpose() * f);
    delta -= H * beta;
  }
  const double sigma2_hat = delta.dot(llt.solve(delta)) / n;
  if (!(sigma2_hat > 0.0))
    throw std::runtime_error("mle_fit: concentrated variance is not positive");

  MleResult res;
  res.model = fit_gp(X, f, KernelSpec::stationary(sigma2_hat, rho_hat.asDiagonal()), basis);
  res.loglik = log_likelihood(X, f, res.model.spec, res.model.beta, basis);
  res.evals = evals;
  res.converged = converged;
  return res;
}

Sensitivities prediction_sensitivities(const FittedGp& model, const Eigen::VectorXd& x) {
  const Eigen::VectorXd rho = model.spec.rho();
  const double s2 = model.spec.sigma2;
  const int n = model.n();
  const int d = model.X.d();
  const Eigen::VectorXd psi = kernel_vector(model.spec, model.X, x);
  const Eigen::VectorXd w = model.llt.solve(psi);

  Sensitivities out;
  if (model.p() > 0)
    out.c1 = model.basis.eval(x, model.spec) - model.H.transpose() * w;
  else
    out.c1 = Eigen::VectorXd();

  const Eigen::MatrixXd Phi = correlation_matrix(model.X.pts, rho);
  const auto G = correlation_grads(model.X.pts, rho, Phi);
  out.c3.resize(d);
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXd t(n);
    for (int j = 0; j < n; ++j) {
      const Eigen::VectorXd delta = x - model.X.pts.row(j).transpose();
      const double corr = std::exp(-(rho.array() * delta.array()).square().sum());
      t[j] = -2.0 * rho[k] * delta[k] * delta[k] * corr;
    }
    const Eigen::VectorXd Tk = s2 * (t - G[k] * w);  // G_k symmetric
    out.c3[k] = Tk.dot(model.alpha);
  }
  return out;
}

double s1_estimate(const RegressionBasis& basis, const Eigen::MatrixXd& sample,
                   const KernelSpec& spec) {
  const int pp = basis.p(static_cast<int>(sample.cols()));
  if (pp == 0)
    throw std::invalid_argument("s1_estimate: no regression functions");
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(pp, pp);
  for (int i = 0; i < sample.rows(); ++i) {
    const Eigen::VectorXd h = basis.eval(sample.row(i).transpose(), spec);
    M.noalias() += h * h.transpose();
  }
  M /= static_cast<double>(sample.rows());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double s2_estimate(const DesignMatrix& X, const Eigen::VectorXd& rho) {
  const int n = X.n();
  const int d = X.d();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  double c = 0.0;
  Eigen::VectorXd g(d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Eigen::VectorXd delta = X.pts.row(i) - X.pts.row(j);
      const double corr = std::exp(-(rho.array() * delta.array()).square().sum());
      for (int k = 0; k < d; ++k)
        g[k] = -2.0 * rho[k] * delta[k] * delta[k] * corr;
      A.noalias() += g * g.transpose();
      b += g * corr;
      c += corr * corr;
    }
  const double m = static_cast<double>(n) * n;
  A /= m;
  b /= m;
  c /= m;
  const Eigen::MatrixXd S = A - b * b.transpose() / c;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

FisherMoments default_moments(const FittedGp& model) {
  FisherMoments m;
  m.sup_phi = 1.0;
  if (model.p() > 0)
    m.s1 = s1_estimate(model.basis, model.X.pts, model.spec);
  m.s2 = s2_estimate(model.X, model.spec.rho());
  return m;
}

double param_error_bound(const FittedGp& model, const Eigen::VectorXd& x,
                         const FisherMoments& moments) {
  if (moments.s2 <= 1e-13) {
    std::ostringstream os;
    os << "parameter-estimation bound is degenerate: the centered pair average "
          "of correlation gradients is numerically singular (s2 = "
       << moments.s2 << "); length-scale directions are collinear over the design";
    throw std::invalid_argument(os.str());
  }
  const auto sens = prediction_sensitivities(model, x);
  double val = 0.0;
  if (model.p() > 0) val += sens.c1.squaredNorm() / moments.s1;
  val += 2.0 * moments.sup_phi * sens.c3.squaredNorm() / moments.s2;
  return moments.sup_phi * val;
}

double param_error_exact(const FittedGp& model, const Eigen::VectorXd& x) {
  const auto sens = prediction_sensitivities(model, x);
  const auto blocks = fisher_blocks(model.X, model.spec, model.basis);
  double val = 0.0;
  if (model.p() > 0)
    val += sens.c1.dot(blocks.I11.ldlt().solve(sens.c1));
  const Eigen::MatrixXd S =
      blocks.I33 - blocks.I32 * blocks.I32.transpose() / blocks.I22;
  val += sens.c3.dot(S.ldlt().solve(sens.c3));
  return val;
}

ParamCriterion param_design_criterion(const DesignMatrix& X, const KernelSpec& spec,
                                      const RegressionBasis& basis,
                                      const CandidateGrid& grid) {
  const Eigen::VectorXd rho = spec.rho();
  const double s2v = spec.sigma2;
  const int n = X.n();
  const int d = X.d();
  const int pp = basis.p(d);

  ParamCriterion out;
  out.s2 = s2_estimate(X, rho);
  if (out.s2 <= 1e-13) {
    std::ostringstream os;
    os << "parameter-estimation criterion is degenerate on this design (s2 = "
       << out.s2 << ")";
    throw std::invalid_argument(os.str());
  }
  if (pp > 0) out.s1 = s1_estimate(basis, X.pts, spec);

  const Eigen::MatrixXd Psi = kernel_matrix(spec, X.pts, X.pts);
  const auto llt = factorize_spd(Psi, "param_design_criterion");
  const Eigen::MatrixXd Phi = correlation_matrix(X.pts, rho);
  const auto G = correlation_grads(X.pts, rho, Phi);

  Eigen::MatrixXd H, W;
  Eigen::LDLT<Eigen::MatrixXd> Aldlt;  // factors I11 = H' Psi^{-1} H
  if (pp > 0) {
    H = basis.matrix(X, spec);
    W = llt.solve(H);
    Aldlt.compute(H.transpose() * W);
  }

  const auto blocks = fisher_blocks(X, spec, basis);
  const Eigen::MatrixXd S33 =
      blocks.I33 - blocks.I32 * blocks.I32.transpose() / blocks.I22;
  const Eigen::MatrixXd S33inv =
      S33.ldlt().solve(Eigen::MatrixXd::Identity(d, d));

  const double sup_phi = 1.0;
  Eigen::VectorXd psi(n), w(n), t(n);
  Eigen::MatrixXd T(d, n), M(d, d);
  for (int gidx = 0; gidx < grid.pts.rows(); ++gidx) {
    const Eigen::VectorXd x = grid.pts.row(gidx).transpose();
    psi = kernel_vector(spec, X, x);
    w = llt.solve(psi);

    double c1sq = 0.0, c1_exact = 0.0;
    if (pp > 0) {
      const Eigen::VectorXd c1 = basis.eval(x, spec) - W.transpose() * psi;
      c1sq = c1.squaredNorm();
      c1_exact = c1.dot(Aldlt.solve(c1));
    }

    for (int k = 0; k < d; ++k) {
      for (int j = 0; j < n; ++j) {
        const Eigen::VectorXd delta = x - X.pts.row(j).transpose();
        const double corr = std::exp(-(rho.array() * delta.array()).square().sum());
        t[j] = -2.0 * rho[k] * delta[k] * delta[k] * corr;
      }
      T.row(k) = (s2v * (t - G[k] * w)).transpose();
    }
    for (int k = 0; k < d; ++k) {
      const Eigen::VectorXd u = llt.solve(T.row(k).transpose());
      for (int l = 0; l < d; ++l) M(l, k) = T.row(l) * u;
    }
    const double ec3sq = M.trace();
    const double bound =
        sup_phi * (c1sq / out.s1 * (pp > 0 ? 1.0 : 0.0) +
                   2.0 * sup_phi * ec3sq / out.s2);
    const double exact = c1_exact + (S33inv * M).trace();
    // Every term is a quadratic form, so substantive negatives mean the
    // solves went through a numerically singular kernel matrix and the
    // values are garbage. An optimizer fed such values would chase them to
    // -infinity, so fail loudly instead.
    const double wobble = 1e-10 * (1.0 + std::abs(ec3sq) + c1sq + std::abs(c1_exact));
    if (bound < -wobble || exact < -wobble || ec3sq < -wobble)
      throw FactorizationError(
          "parameter criterion lost positivity; kernel matrix too ill-conditioned");
    out.sup_bound = std::max(out.sup_bound, std::max(0.0, bound));
    out.sup_exact = std::max(out.sup_exact, std::max(0.0, exact));
    out.sup_total = std::max(out.sup_total, std::max(0.0, bound + exact));
  }
  return out;
}

}  // namespace gpdex
