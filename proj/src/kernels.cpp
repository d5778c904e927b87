#include "gpdex/kernels.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace gpdex {

double WeightModel::w1sq(const Eigen::VectorXd& u) const {
  if (kind == Kind::Quadratic) return std::max(0.0, 1.0 - 0.5 * u.squaredNorm());
  return 1.0 - 1.0 / (1.0 + std::exp(-slope * (u[0] - center)));
}

void WeightModel::validate(int d) const {
  if (kind == Kind::Quadratic && d > 2)
    throw std::invalid_argument(
        "quadratic weights need |u|^2/2 <= 1 on the unit box, which fails for d > 2");
  if (kind == Kind::Logistic && slope <= 0.0)
    throw std::invalid_argument("logistic weight slope must be positive");
}

double WeightModel::lipschitz_w1() const {
  if (kind == Kind::Quadratic) return 1.0 / std::sqrt(2.0);
  return slope / (3.0 * std::sqrt(3.0));
}

double WeightModel::lipschitz_w2() const {
  if (kind == Kind::Quadratic) return 1.0 / std::sqrt(2.0);
  return slope / (3.0 * std::sqrt(3.0));
}

int KernelSpec::d() const {
  return static_cast<int>(variant == Variant::Stationary ? theta.rows()
                                                         : theta1.rows());
}

void KernelSpec::validate() const {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  if (variant == Variant::Stationary) {
    Anisotropy a(theta);  // det check
    (void)a;
    return;
  }
  Anisotropy a1(theta1), a2(theta2);
  if (theta1.rows() != theta2.rows())
    throw std::invalid_argument("the two metric maps must share a dimension");
  weights.validate(static_cast<int>(theta1.rows()));
  // Narrowness of regime 1 relative to regime 2: the largest singular value
  // of Theta2^{-1} Theta1 must be below 1.
  const Eigen::MatrixXd B = theta2.partialPivLu().solve(theta1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(B.transpose() * B);
  const double lam = es.eigenvalues().maxCoeff();
  if (!(lam < 1.0)) {
    std::ostringstream os;
    os << "two-regime kernel needs lambda_max(Theta1' Theta2^{-T} Theta2^{-1} "
          "Theta1) < 1; got "
       << lam;
    throw std::invalid_argument(os.str());
  }
}

Eigen::VectorXd KernelSpec::rho() const {
  if (variant != Variant::Stationary)
    throw std::invalid_argument("length-scale vector is defined for stationary kernels only");
  const int n = static_cast<int>(theta.rows());
  const double scale = theta.cwiseAbs().maxCoeff();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && std::abs(theta(i, j)) > 1e-12 * scale)
        throw std::invalid_argument(
            "length-scale operations need a diagonal metric map");
  Eigen::VectorXd r = theta.diagonal();
  if ((r.array() <= 0.0).any())
    throw std::invalid_argument("length-scale operations need positive diagonal entries");
  return r;
}

KernelSpec KernelSpec::stationary(double sigma2, Eigen::MatrixXd theta) {
  KernelSpec s;
  s.variant = Variant::Stationary;
  s.sigma2 = sigma2;
  s.theta = std::move(theta);
  s.validate();
  return s;
}

KernelSpec KernelSpec::stationary_iso(double sigma2, int d, double c) {
  return stationary(sigma2, c * Eigen::MatrixXd::Identity(d, d));
}

KernelSpec KernelSpec::two_regime(double sigma2, Eigen::MatrixXd theta1,
                                  Eigen::MatrixXd theta2, WeightModel w) {
  KernelSpec s;
  s.variant = Variant::NonStationary;
  s.sigma2 = sigma2;
  s.theta1 = std::move(theta1);
  s.theta2 = std::move(theta2);
  s.weights = w;
  s.validate();
  return s;
}

double kernel_value(const KernelSpec& spec, const Eigen::VectorXd& u,
                    const Eigen::VectorXd& v) {
  if (spec.variant == KernelSpec::Variant::Stationary)
    return spec.sigma2 * base_correlation((spec.theta * (u - v)).norm());
  const double d1 = (spec.theta1 * (u - v)).norm();
  const double d2 = (spec.theta2 * (u - v)).norm();
  return spec.sigma2 * (spec.weights.w1(u) * spec.weights.w1(v) * base_correlation(d1) +
                        spec.weights.w2(u) * spec.weights.w2(v) * base_correlation(d2));
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const Eigen::MatrixXd& P,
                              const Eigen::MatrixXd& Q) {
  Eigen::MatrixXd K(P.rows(), Q.rows());
  if (spec.variant == KernelSpec::Variant::Stationary) {
    const Eigen::MatrixXd TP = P * spec.theta.transpose();
    const Eigen::MatrixXd TQ = Q * spec.theta.transpose();
    for (int i = 0; i < P.rows(); ++i)
      for (int j = 0; j < Q.rows(); ++j)
        K(i, j) = spec.sigma2 *
                  std::exp(-(TP.row(i) - TQ.row(j)).squaredNorm());
    return K;
  }
  const Eigen::MatrixXd P1 = P * spec.theta1.transpose();
  const Eigen::MatrixXd Q1 = Q * spec.theta1.transpose();
  const Eigen::MatrixXd P2 = P * spec.theta2.transpose();
  const Eigen::MatrixXd Q2 = Q * spec.theta2.transpose();
  Eigen::VectorXd pw1(P.rows()), pw2(P.rows()), qw1(Q.rows()), qw2(Q.rows());
  for (int i = 0; i < P.rows(); ++i) {
    pw1[i] = spec.weights.w1(P.row(i).transpose());
    pw2[i] = spec.weights.w2(P.row(i).transpose());
  }
  for (int j = 0; j < Q.rows(); ++j) {
    qw1[j] = spec.weights.w1(Q.row(j).transpose());
    qw2[j] = spec.weights.w2(Q.row(j).transpose());
  }
  for (int i = 0; i < P.rows(); ++i)
    for (int j = 0; j < Q.rows(); ++j)
      K(i, j) = spec.sigma2 *
                (pw1[i] * qw1[j] * std::exp(-(P1.row(i) - Q1.row(j)).squaredNorm()) +
                 pw2[i] * qw2[j] * std::exp(-(P2.row(i) - Q2.row(j)).squaredNorm()));
  return K;
}

Eigen::VectorXd kernel_vector(const KernelSpec& spec, const DesignMatrix& X,
                              const Eigen::VectorXd& x) {
  return kernel_matrix(spec, X.pts, x.transpose());
}

Eigen::VectorXd kernel_grad_rho(const Eigen::VectorXd& rho,
                                const Eigen::VectorXd& u,
                                const Eigen::VectorXd& v) {
  const Eigen::VectorXd delta = u - v;
  const double corr = std::exp(-(rho.array() * delta.array()).square().sum());
  return (-2.0 * corr) * (rho.array() * delta.array().square()).matrix();
}

SpectralConfig SpectralConfig::defaults(int d) {
  const double gamma = std::tgamma(0.5 * d + 1.0);
  SpectralConfig c;
  c.c_star = 1.1 * 12.0 *
             std::pow(18.0 / (M_PI * gamma * gamma), -1.0 / (d + 1));
  return c;
}

double fourier_min(double M, int d) {
  if (M < 0.0) throw std::invalid_argument("fourier_min: M must be >= 0");
  return std::pow(2.0, -0.5 * d) * std::exp(-M * M);
}

double upsilon(double M, int d) {
  if (!std::isfinite(M)) return 0.0;  // vanishing separation limit
  return fourier_min(M, d) / std::tgamma(0.5 * d + 1.0) *
         std::pow(M / std::pow(2.0, 1.5), d);
}

double upsilon_coarse(double M, double r_star, int d) {
  const double lo = std::min(r_star, M);
  return std::min(upsilon(lo, d), upsilon(M, d));
}

namespace {

using nlohmann::json;

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& key) {
  const auto& arr = j.at(key);
  if (!arr.is_array() || arr.empty())
    throw std::invalid_argument("kernel spec: '" + key + "' must be a non-empty matrix");
  const std::size_t rows = arr.size();
  const std::size_t cols = arr[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (arr[i].size() != cols)
      throw std::invalid_argument("kernel spec: ragged matrix in '" + key + "'");
    for (std::size_t jj = 0; jj < cols; ++jj)
      m(static_cast<int>(i), static_cast<int>(jj)) = arr[i][jj].get<double>();
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

KernelSpec kernel_spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("kernel spec is not valid JSON: ") + e.what());
  }
  KernelSpec spec;
  const std::string variant = j.value("variant", "stationary");
  spec.sigma2 = j.value("sigma2", 1.0);
  if (variant == "stationary") {
    spec.variant = KernelSpec::Variant::Stationary;
    if (j.contains("theta")) {
      spec.theta = matrix_from_json(j, "theta");
    } else if (j.contains("rho")) {
      const auto& arr = j.at("rho");
      Eigen::VectorXd r(arr.size());
      for (std::size_t i = 0; i < arr.size(); ++i)
        r[static_cast<int>(i)] = arr[i].get<double>();
      spec.theta = r.asDiagonal();
    } else {
      throw std::invalid_argument("stationary kernel spec needs 'theta' or 'rho'");
    }
  } else if (variant == "nonstationary") {
    spec.variant = KernelSpec::Variant::NonStationary;
    spec.theta1 = matrix_from_json(j, "theta1");
    spec.theta2 = matrix_from_json(j, "theta2");
    const auto& w = j.at("weights");
    const std::string model = w.at("model").get<std::string>();
    if (model == "quadratic") {
      spec.weights.kind = WeightModel::Kind::Quadratic;
    } else if (model == "logistic") {
      spec.weights.kind = WeightModel::Kind::Logistic;
      spec.weights.slope = w.value("slope", 25.0);
      spec.weights.center = w.value("center", 0.5);
    } else {
      throw std::invalid_argument("unknown weight model: " + model);
    }
  } else {
    throw std::invalid_argument("unknown kernel variant: " + variant);
  }
  spec.validate();
  return spec;
}

std::string kernel_spec_to_json(const KernelSpec& spec) {
  json j;
  j["sigma2"] = spec.sigma2;
  if (spec.variant == KernelSpec::Variant::Stationary) {
    j["variant"] = "stationary";
    j["theta"] = matrix_to_json(spec.theta);
  } else {
    j["variant"] = "nonstationary";
    j["theta1"] = matrix_to_json(spec.theta1);
    j["theta2"] = matrix_to_json(spec.theta2);
    json w;
    w["model"] = spec.weights.kind == WeightModel::Kind::Quadratic ? "quadratic" : "logistic";
    if (spec.weights.kind == WeightModel::Kind::Logistic) {
      w["slope"] = spec.weights.slope;
      w["center"] = spec.weights.center;
    }
    j["weights"] = w;
  }
  return j.dump(2);
}

KernelSpec load_kernel_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open kernel spec: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return kernel_spec_from_json(ss.str());
}

}  // namespace gpdex
