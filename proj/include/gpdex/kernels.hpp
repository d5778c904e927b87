#pragma once

#include <Eigen/Dense>

#include <string>

#include "gpdex/geometry.hpp"

namespace gpdex {

// Base correlation: phi(t) = exp(-t^2) applied to a metric distance.
inline double base_correlation(double t) { return std::exp(-t * t); }

// Weight pair (w1, w2) with w1^2 + w2^2 = 1 used by the two-regime covariance.
struct WeightModel {
  enum class Kind { Quadratic, Logistic };

  Kind kind = Kind::Quadratic;
  double slope = 25.0;   // logistic only
  double center = 0.5;   // logistic only

  // w1^2 = 1 - |u|^2/2 (valid for d <= 2 on the unit box);
  // logistic: w2^2 = 1 / (1 + exp(-slope (u1 - center))).
  double w1sq(const Eigen::VectorXd& u) const;
  double w2sq(const Eigen::VectorXd& u) const { return 1.0 - w1sq(u); }
  double w1(const Eigen::VectorXd& u) const { return std::sqrt(std::max(0.0, w1sq(u))); }
  double w2(const Eigen::VectorXd& u) const { return std::sqrt(std::max(0.0, w2sq(u))); }

  void validate(int d) const;

  // Lipschitz constants of w1 and w2 used in remainder terms.
  // Quadratic: sup of the gradient norm over the inscribed region |u| <= 1 is
  // 2^{-1/2} for both weights; the gradient of w1 is unbounded on the sliver
  // |u| > 1 of the unit square where w1 -> 0, so no finite global constant
  // exists and the shipped value is the inscribed-region sup (configurable
  // upstream). Logistic: the 1-d maximum of (slope/2) sqrt(s)(1-s) over the
  // logistic value s is at s = 1/3, giving slope/(3 sqrt(3)) for both weights.
  double lipschitz_w1() const;
  double lipschitz_w2() const;
};

struct KernelSpec {
  enum class Variant { Stationary, NonStationary };

  Variant variant = Variant::Stationary;
  double sigma2 = 1.0;

  Eigen::MatrixXd theta;             // stationary metric map
  Eigen::MatrixXd theta1, theta2;    // two-regime metric maps
  WeightModel weights;               // two-regime only

  int d() const;
  void validate() const;  // det checks; two-regime narrowness condition

  Anisotropy anisotropy() const { return Anisotropy(theta); }
  Anisotropy anisotropy1() const { return Anisotropy(theta1); }
  Anisotropy anisotropy2() const { return Anisotropy(theta2); }

  // Diagonal of the stationary map as a length-scale vector; throws if the
  // map is not diagonal with positive entries (the derivative-based
  // operations are defined in that parameterization only).
  Eigen::VectorXd rho() const;

  static KernelSpec stationary(double sigma2, Eigen::MatrixXd theta);
  static KernelSpec stationary_iso(double sigma2, int d, double c);
  static KernelSpec two_regime(double sigma2, Eigen::MatrixXd theta1,
                               Eigen::MatrixXd theta2, WeightModel w);
};

double kernel_value(const KernelSpec& spec, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& v);

// Cross-covariance matrix between the rows of P and the rows of Q.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& P,
                              const Eigen::MatrixXd& Q);

Eigen::VectorXd kernel_vector(const KernelSpec& spec, const DesignMatrix& X,
                              const Eigen::VectorXd& x);

// Gradient of the correlation exp(-sum_k rho_k^2 (u_k - v_k)^2) in rho.
// Component k: -2 rho_k (u_k - v_k)^2 times the correlation itself.
Eigen::VectorXd kernel_grad_rho(const Eigen::VectorXd& rho,
                                const Eigen::VectorXd& u,
                                const Eigen::VectorXd& v);

// Tuning constant for the smallest-eigenvalue machinery. The default carries
// a 1.1 safety factor that makes the per-point bracket
// 1 - (q/qj) / 1.1^{d+1} positive for every design without duplicates.
struct SpectralConfig {
  double c_star = 0.0;
  static SpectralConfig defaults(int d);
};

// Smallest value of the correlation's Fourier transform over the ball
// |omega| <= 2M (transform convention (2pi)^{-d/2} integral). For the
// Gaussian correlation the transform is radial and decreasing, so the
// minimum sits on the boundary: 2^{-d/2} exp(-M^2).
double fourier_min(double M, int d);

// Spectral mass floor fourier_min(M) / Gamma(d/2+1) * (M / 2^{3/2})^d;
// proportional to M^d exp(-M^2), unimodal with mode at sqrt(d/2).
double upsilon(double M, int d);

// Monotone coarsening: inf of upsilon over m in [r_star, M]. The integrand is
// unimodal so the inf is at an endpoint; an empty interval (M < r_star, which
// happens when a widely spaced regime exceeds the domain diameter of the
// narrow one) is clamped to [min(r_star, M), M].
double upsilon_coarse(double M, double r_star, int d);

// JSON round trip. Stationary:
//   {"variant":"stationary","sigma2":1.0,"theta":[[2,0],[0,2]]}
// Two-regime adds "theta1"/"theta2" and "weights":
//   {"model":"quadratic"} or {"model":"logistic","slope":25,"center":0.5}.
KernelSpec kernel_spec_from_json(const std::string& text);
std::string kernel_spec_to_json(const KernelSpec& spec);
KernelSpec load_kernel_spec(const std::string& path);

}  // namespace gpdex
