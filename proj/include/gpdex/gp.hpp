#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <stdexcept>
#include <string>

#include "gpdex/geometry.hpp"
#include "gpdex/kernels.hpp"

namespace gpdex {

// Raised when a symmetric positive-definite factorization fails. The message
// carries the eigenvalue range of the offending matrix; there is no silent
// jitter anywhere in the fitting path.
class FactorizationError : public std::runtime_error {
 public:
  explicit FactorizationError(const std::string& what) : std::runtime_error(what) {}
};

struct RegressionBasis {
  enum class Kind { None, Constant, ConstantLinear, KernelCenters };

  Kind kind = Kind::None;
  Eigen::MatrixXd centers;  // KernelCenters only: one center per row

  int p(int d) const;
  // KernelCenters evaluates half kernels against the centers, so the kernel
  // spec participates; the polynomial kinds ignore it.
  Eigen::VectorXd eval(const Eigen::VectorXd& x, const KernelSpec& spec) const;
  Eigen::MatrixXd matrix(const DesignMatrix& X, const KernelSpec& spec) const;

  static RegressionBasis none() { return {}; }
  static RegressionBasis constant();
  static RegressionBasis constant_linear();
  static RegressionBasis kernel_centers(Eigen::MatrixXd centers);
};

// Full parameter vector (trend coefficients, variance, length-scales).
struct GpParameters {
  Eigen::VectorXd beta;
  double sigma2 = 1.0;
  Eigen::VectorXd rho;
};

// SPD factorization with diagnostics on failure.
Eigen::LLT<Eigen::MatrixXd> factorize_spd(const Eigen::MatrixXd& K,
                                          const std::string& context);

struct FittedGp {
  DesignMatrix X;
  KernelSpec spec;
  RegressionBasis basis;
  Eigen::VectorXd f;
  Eigen::VectorXd beta;       // GLS coefficients (empty when p = 0)
  Eigen::MatrixXd H;          // n x p regression matrix
  Eigen::LLT<Eigen::MatrixXd> llt;
  Eigen::VectorXd alpha;      // Psi^{-1} (f - H beta)

  // Diagnostics recorded at fit time, never enforced: the relative residual
  // of the factorization on fixed probe vectors and the worst relative
  // reproduction error of the observations at the design points.
  double probe_rel_residual = 0.0;
  double interp_rel_error = 0.0;

  int n() const { return X.n(); }
  int p() const { return basis.p(X.d()); }
};

Eigen::VectorXd gls_beta(const DesignMatrix& X, const Eigen::VectorXd& f,
                         const KernelSpec& spec, const RegressionBasis& basis);

FittedGp fit_gp(const DesignMatrix& X, const Eigen::VectorXd& f,
                const KernelSpec& spec, const RegressionBasis& basis);

double blup_predict(const FittedGp& model, const Eigen::VectorXd& x);

// Mean squared prediction error of the universal predictor under the assumed
// covariance, partitioned form: kernel variance at x minus the explained part
// plus the trend-estimation inflation. Values at design points are 0 up to
// factorization tolerance and may round to tiny negatives; callers needing a
// hard floor clamp themselves.
double mspe(const DesignMatrix& X, const KernelSpec& spec,
            const RegressionBasis& basis, const Eigen::VectorXd& x);

// Same quantity through the bordered indefinite system; agrees with mspe()
// to relative 1e-8 on well-conditioned inputs (kept for cross-checks).
double mspe_bordered(const DesignMatrix& X, const KernelSpec& spec,
                     const RegressionBasis& basis, const Eigen::VectorXd& x);

// Gaussian log likelihood without the 2 pi constant:
// -1/2 log det Psi - 1/2 (f - H beta)' Psi^{-1} (f - H beta).
double log_likelihood(const DesignMatrix& X, const Eigen::VectorXd& f,
                      const KernelSpec& spec, const Eigen::VectorXd& beta,
                      const RegressionBasis& basis);

struct GpScore {
  Eigen::VectorXd beta_block;
  double sigma2_block = 0.0;
  Eigen::VectorXd rho_block;
};
GpScore score_vector(const DesignMatrix& X, const Eigen::VectorXd& f,
                     const KernelSpec& spec, const Eigen::VectorXd& beta,
                     const RegressionBasis& basis);

// Information blocks for (beta, sigma2, rho). The beta block is orthogonal to
// the covariance parameters, so those cross blocks are identically zero and
// not stored. Contractions are accumulated from the d per-component
// derivative matrices; the n^2 x d stacked Jacobian is only ever built by
// dense_param_jacobian() below for small-n validation.
struct FisherBlocks {
  Eigen::MatrixXd I11;   // p x p
  double I22 = 0.0;      // scalar
  Eigen::VectorXd I32;   // d
  Eigen::MatrixXd I33;   // d x d
};
FisherBlocks fisher_blocks(const DesignMatrix& X, const KernelSpec& spec,
                           const RegressionBasis& basis);

// Columns are vec(d Psi / d rho_k). Test helper; quadratic memory in n.
Eigen::MatrixXd dense_param_jacobian(const DesignMatrix& X, const KernelSpec& spec);

// Gram matrix of the stacked Jacobian, accumulated pairwise.
Eigen::MatrixXd param_jacobian_gram(const DesignMatrix& X, const KernelSpec& spec);

struct MleOptions {
  bool fix_rho = false;
  long max_evals = 200;
  double rho_min = 1e-3;
  double rho_max = 60.0;
};
struct MleResult {
  FittedGp model;
  double loglik = 0.0;
  long evals = 0;
  bool converged = false;
};
// Profile likelihood fit: beta and sigma2 concentrated out in closed form,
// the length-scales searched over log space by a deterministic simplex from
// the starting spec's diagonal. With fix_rho the closed forms are used as is.
MleResult mle_fit(const DesignMatrix& X, const Eigen::VectorXd& f,
                  const KernelSpec& start, const RegressionBasis& basis,
                  const MleOptions& opts = {});

// First-order sensitivities of the plug-in predictor at x: c1 to the trend
// coefficients, c3 to the length-scales (beta held fixed).
struct Sensitivities {
  Eigen::VectorXd c1;
  Eigen::VectorXd c3;
};
Sensitivities prediction_sensitivities(const FittedGp& model, const Eigen::VectorXd& x);

// Moments of the limiting design measure entering the closed-form bound.
struct FisherMoments {
  double s1 = 1.0;      // smallest eigenvalue of the second-moment matrix of h
  double s2 = 0.0;      // smallest eigenvalue of the centered gradient pair average
  double sup_phi = 1.0; // sup of the correlation function
};

double s1_estimate(const RegressionBasis& basis, const Eigen::MatrixXd& sample,
                   const KernelSpec& spec);
double s2_estimate(const DesignMatrix& X, const Eigen::VectorXd& rho);

// Plug-in moments from the model's own design.
FisherMoments default_moments(const FittedGp& model);

// Closed-form parameter-estimation error bound at x:
// sup_phi (|c1|^2 / s1 + 2 sup_phi |c3|^2 / s2); the trend term is dropped
// when there are no regression functions. Throws on degenerate s2.
double param_error_bound(const FittedGp& model, const Eigen::VectorXd& x,
                         const FisherMoments& moments);

// Exact first-order counterpart c1' I11^{-1} c1 + c3' (I33 - I32 I32'/I22)^{-1} c3.
double param_error_exact(const FittedGp& model, const Eigen::VectorXd& x);

// Design-level sweep of the parameter-estimation criterion over a grid.
// No observations exist at design time, so the residual-dependent factor is
// replaced by its exact expectation under the assumed zero-mean process:
// E |c3|^2 = tr(T Psi^{-1} T') with T the length-scale sensitivity factor.
struct ParamCriterion {
  double sup_bound = 0.0;   // worst-case closed-form bound over the grid
  double sup_exact = 0.0;   // worst-case exact first-order form
  double sup_total = 0.0;   // worst case of their sum (the design objective)
  double s1 = 1.0;
  double s2 = 0.0;
};
ParamCriterion param_design_criterion(const DesignMatrix& X, const KernelSpec& spec,
                                      const RegressionBasis& basis,
                                      const CandidateGrid& grid);

}  // namespace gpdex
