#pragma once

// Spectral-algorithm estimators f(x) = sum_i alpha_i K(x_i, x) with
// alpha = (1/n) phi_lambda(G) Y, G = K(X, X) / n, plus the closed-form and
// ODE oracles and the excess-risk / bias-variance evaluation.

#include <Eigen/Dense>

#include <cmath>
#include <memory>
#include <string>
#include <utility>

#include "speclab/error.hpp"
#include "speclab/filters.hpp"
#include "speclab/kernels.hpp"
#include "speclab/linalg.hpp"
#include "speclab/sphere.hpp"
#include "speclab/targets.hpp"

namespace speclab {

struct Dataset {
  PointCloud x;
  Eigen::VectorXd y;
  double sigma = 0.0;  // noise level, for reporting

  Dataset(PointCloud points, Eigen::VectorXd responses, double noise_sigma = 0.0)
      : x(std::move(points)), y(std::move(responses)), sigma(noise_sigma) {
    require(x.size() >= 1, ErrorCode::precondition, "dataset needs n >= 1");
    require(y.size() == x.size(), ErrorCode::dimension_mismatch, "Y must have one entry per point");
    require(y.allFinite(), ErrorCode::precondition, "responses must be finite");
  }

  Eigen::Index size() const { return x.size(); }
};

/// Eigendecomposition of the normalized Gram matrix G = K(X, X)/n for one
/// design. Eigenvalues are clamped at 0. Every filter is applied through it.
class SpectralBasis {
 public:
  SpectralBasis(InnerProductKernel kernel, PointCloud x) : kernel_(std::move(kernel)), x_(std::move(x)) {
    require(x_.size() >= 1, ErrorCode::precondition, "need at least one training point");
    gram_ = gram_matrix(kernel_, x_).values;
    require(gram_.allFinite(), ErrorCode::precondition, "Gram matrix is not finite");
    auto eig = symmetric_eigen(gram_ / static_cast<double>(n()));
    eigenvalues_ = eig.values.cwiseMax(0.0);
    eigenvectors_ = std::move(eig.vectors);
  }

  const InnerProductKernel& kernel() const noexcept { return kernel_; }
  const PointCloud& x() const noexcept { return x_; }
  Eigen::Index n() const noexcept { return x_.size(); }
  const Eigen::MatrixXd& gram() const noexcept { return gram_; }  // K(X, X), not divided by n
  const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const noexcept { return eigenvectors_; }
  double largest_eigenvalue() const { return eigenvalues_.size() ? eigenvalues_.maxCoeff() : 0.0; }

  /// Throws ErrorCode::step_size when gradient descent violates eta < 1/(2 lambda_max(G)).
  void check_filter(const FilterSpec& filter) const {
    if (filter.family() != FilterFamily::gradient_descent) return;
    const double bound = 1.0 / (2.0 * largest_eigenvalue());
    if (!(filter.kind().eta < bound))
      throw Error(ErrorCode::step_size, "gradient descent step " + std::to_string(filter.kind().eta) +
                                            " is not below 1/(2 lambda_max(G)) = " + std::to_string(bound));
  }

  /// phi_lambda applied to every eigenvalue.
  Eigen::VectorXd filtered_eigenvalues(const FilterSpec& filter) const {
    check_filter(filter);
    Eigen::VectorXd out(eigenvalues_.size());
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = filter.phi(eigenvalues_(i));
    return out;
  }

  /// phi_lambda(G) = U phi(Lambda) U^T.
  Eigen::MatrixXd filter_matrix(const FilterSpec& filter) const {
    const Eigen::VectorXd f = filtered_eigenvalues(filter);
    return eigenvectors_ * f.asDiagonal() * eigenvectors_.transpose();
  }

  /// alpha = (1/n) U phi(Lambda) U^T y.
  Eigen::VectorXd coefficients(const FilterSpec& filter, const Eigen::VectorXd& y) const {
    require(y.size() == n(), ErrorCode::dimension_mismatch, "response vector does not match the design");
    const Eigen::VectorXd f = filtered_eigenvalues(filter);
    const Eigen::VectorXd projected = eigenvectors_.transpose() * y;
    return eigenvectors_ * f.cwiseProduct(projected) / static_cast<double>(n());
  }

 private:
  InnerProductKernel kernel_;
  PointCloud x_;
  Eigen::MatrixXd gram_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
};

/// Immutable fitted estimator; safe to share across threads.
struct FittedEstimator {
  PointCloud x_train;
  Eigen::VectorXd alpha;
  InnerProductKernel kernel;
  FilterSpec filter;
  std::shared_ptr<const SpectralBasis> basis;  // null for the oracle fits
};

inline FittedEstimator fit_spectral(std::shared_ptr<const SpectralBasis> basis, const FilterSpec& filter,
                                    const Eigen::VectorXd& y) {
  require(basis != nullptr, ErrorCode::precondition, "fit_spectral needs a basis");
  Eigen::VectorXd alpha = basis->coefficients(filter, y);
  return FittedEstimator{basis->x(), std::move(alpha), basis->kernel(), filter, std::move(basis)};
}

inline FittedEstimator fit_spectral(const InnerProductKernel& kernel, const FilterSpec& filter, const Dataset& data) {
  return fit_spectral(std::make_shared<const SpectralBasis>(kernel, data.x), filter, data.y);
}

/// KRR through alpha = (K + n lambda I)^{-1} Y, solved by Cholesky. Shares no
/// code with the eigendecomposition path.
inline FittedEstimator fit_krr_direct(const InnerProductKernel& kernel, double lambda, const Dataset& data) {
  require(lambda > 0.0 && std::isfinite(lambda), ErrorCode::precondition, "lambda must be positive and finite");
  const auto n = data.size();
  Eigen::MatrixXd a = gram_matrix(kernel, data.x).values;
  a.diagonal().array() += static_cast<double>(n) * lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::solver, "K + n lambda I is not positive definite (kernel indefinite beyond tolerance)");
  Eigen::VectorXd alpha = llt.solve(data.y);
  return FittedEstimator{data.x, std::move(alpha), kernel, FilterSpec::krr(lambda), nullptr};
}

namespace detail {

inline double power_iteration_max(const Eigen::MatrixXd& g) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(g.rows()).normalized();
  double value = 0.0;
  for (int it = 0; it < 500; ++it) {
    Eigen::VectorXd w = g * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(w);
    v = w / norm;
    if (std::abs(next - value) <= 1e-12 * std::abs(next)) return next;
    value = next;
  }
  return value;
}

}  // namespace detail

/// Explicit Euler on the gradient-flow ODE for the dual coefficients:
/// alpha <- alpha + (step/n)(Y - K alpha), ceil(t_final/step) times from 0.
inline FittedEstimator fit_gf_euler_oracle(const InnerProductKernel& kernel, double t_final, double step,
                                           const Dataset& data) {
  require(t_final >= 0.0 && std::isfinite(t_final), ErrorCode::precondition, "t_final must be finite and >= 0");
  require(step > 0.0, ErrorCode::precondition, "step must be positive");
  const auto n = data.size();
  const double nd = static_cast<double>(n);
  const Eigen::MatrixXd k = gram_matrix(kernel, data.x).values;
  const double top = detail::power_iteration_max(k / nd);
  require(step <= 1.0 / (2.0 * top) * (1.0 + 1e-12), ErrorCode::step_size,
          "Euler step exceeds 1/(2 lambda_max(G)) = " + std::to_string(1.0 / (2.0 * top)));

  const auto steps = static_cast<long long>(std::ceil(t_final / step - 1e-9));
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  const double bound = 1e6 * (t_final / nd) * data.y.norm() + 1e-300;
  for (long long i = 0; i < steps; ++i) {
    alpha += (step / nd) * (data.y - k * alpha);
    if (!alpha.allFinite() || alpha.norm() > bound)
      throw Error(ErrorCode::divergence, "Euler iteration diverged at step " + std::to_string(i));
  }
  return FittedEstimator{data.x, std::move(alpha), kernel, FilterSpec::gradient_flow_time(t_final), nullptr};
}

/// K(X_eval, X_train) alpha.
inline Eigen::VectorXd predict(const FittedEstimator& est, const PointCloud& x_eval) {
  require(x_eval.points().cols() == est.x_train.points().cols(), ErrorCode::dimension_mismatch,
          "predict: evaluation points live in a different dimension");
  if (x_eval.size() == 0) return Eigen::VectorXd(0);
  return cross_kernel(est.kernel, x_eval, est.x_train) * est.alpha;
}

// ---------------------------------------------------------------------------
// Risk

struct RiskReport {
  double excess_risk = 0.0;
  double bias_sq = 0.0;
  double variance = 0.0;
  double mc_std_error = 0.0;
  Eigen::Index test_size = 0;
};

/// Mean and standard error of a vector of per-point contributions.
inline std::pair<double, double> mean_and_stderr(const Eigen::VectorXd& v) {
  const auto m = v.size();
  if (m == 0) return {0.0, 0.0};
  const double mean = v.mean();
  if (m == 1) return {mean, 0.0};
  const double var = (v.array() - mean).square().sum() / static_cast<double>(m - 1);
  return {mean, std::sqrt(var / static_cast<double>(m))};
}

/// Monte-Carlo estimate of the squared L2 distance from predictions to
/// target values over uniform test points.
inline RiskReport excess_risk_mc(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth) {
  require(predicted.size() == truth.size(), ErrorCode::dimension_mismatch, "prediction/target size mismatch");
  const auto [mean, se] = mean_and_stderr((predicted - truth).array().square().matrix());
  RiskReport r;
  r.excess_risk = mean;
  r.mc_std_error = se;
  r.test_size = predicted.size();
  return r;
}

inline RiskReport excess_risk_mc(const FittedEstimator& est, const TargetFunction& f_star, const PointCloud& test) {
  return excess_risk_mc(predict(est, test), f_star(test));
}

/// Exact noise-conditional decomposition on the test points:
/// bias_sq from the noiseless fit, variance = (sigma^2/n^2) mean_z |phi(G) k_z|^2.
inline RiskReport risk_decomposition(const SpectralBasis& basis, const FilterSpec& filter,
                                     const TargetFunction& f_star, double sigma, const PointCloud& test) {
  require(sigma >= 0.0, ErrorCode::precondition, "sigma must be >= 0");
  const double nd = static_cast<double>(basis.n());
  const Eigen::VectorXd f_train = f_star(basis.x());
  const Eigen::VectorXd f_test = f_star(test);
  const Eigen::MatrixXd k_test = cross_kernel(basis.kernel(), test, basis.x());  // m x n
  const Eigen::VectorXd alpha = basis.coefficients(filter, f_train);
  const Eigen::VectorXd bias_pts = (k_test * alpha - f_test).array().square().matrix();

  Eigen::VectorXd var_pts = Eigen::VectorXd::Zero(test.size());
  if (sigma > 0.0) {
    const Eigen::MatrixXd applied = basis.filter_matrix(filter) * k_test.transpose();  // n x m
    var_pts = applied.colwise().squaredNorm().transpose() * (sigma * sigma / (nd * nd));
  }
  RiskReport r;
  r.bias_sq = bias_pts.size() ? bias_pts.mean() : 0.0;
  r.variance = var_pts.size() ? var_pts.mean() : 0.0;
  r.excess_risk = r.bias_sq + r.variance;
  r.mc_std_error = mean_and_stderr(bias_pts + var_pts).second;
  r.test_size = test.size();
  return r;
}

inline RiskReport risk_decomposition(const InnerProductKernel& kernel, const FilterSpec& filter, const PointCloud& x,
                                     const TargetFunction& f_star, double sigma, const PointCloud& test) {
  return risk_decomposition(SpectralBasis(kernel, x), filter, f_star, sigma, test);
}

}  // namespace speclab
