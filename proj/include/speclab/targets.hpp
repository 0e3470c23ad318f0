#pragma once

// Regression functions used by the experiments.

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <utility>
#include <variant>

#include "speclab/error.hpp"
#include "speclab/kernels.hpp"
#include "speclab/sphere.hpp"

namespace speclab {

class TargetFunction {
 public:
  struct Zero {};

  /// f(x) = sum_i K(u_i, x).
  struct KernelSections {
    InnerProductKernel kernel;
    PointCloud anchors;
  };

  /// f(x) = scale * P_k(<xi, x>) with scale = sqrt(mu_k^s N(d, k)).
  struct GegenbauerDegree {
    int degree = 0;
    Eigen::VectorXd xi;
    double s = 1.0;
    double scale = 1.0;
    GegenbauerConvention convention = GegenbauerConvention::ambient;
  };

  static TargetFunction zero(SphereDim dim) { return TargetFunction(dim, Zero{}); }

  static TargetFunction kernel_sections(InnerProductKernel kernel, PointCloud anchors) {
    require(anchors.size() >= 1, ErrorCode::precondition, "kernel-section target needs at least one anchor");
    const SphereDim dim = anchors.dim();
    return TargetFunction(dim, KernelSections{std::move(kernel), std::move(anchors)});
  }

  /// `mu_k` is the kernel eigenvalue at `degree`; the scale makes the
  /// [H]^s norm equal to P_k(1) = 1 under the ambient convention.
  static TargetFunction gegenbauer_degree(SphereDim dim, int degree, Eigen::VectorXd xi, double s, double mu_k,
                                          GegenbauerConvention convention = GegenbauerConvention::ambient) {
    require(degree >= 0, ErrorCode::precondition, "degree must be >= 0");
    require(xi.size() == dim.ambient(), ErrorCode::dimension_mismatch, "xi has the wrong number of coordinates");
    require(std::abs(xi.norm() - 1.0) <= 1e-12, ErrorCode::domain, "xi must be a unit vector");
    require(mu_k >= 0.0, ErrorCode::precondition, "mu_k must be >= 0");
    const double scale = std::sqrt(std::pow(mu_k, s) * harmonic_count(dim, degree).value);
    return TargetFunction(dim, GegenbauerDegree{degree, std::move(xi), s, scale, convention});
  }

  SphereDim dim() const { return dim_; }

  template <class T>
  const T* as() const {
    return std::get_if<T>(&variant_);
  }

  std::string name() const {
    if (as<Zero>()) return "zero";
    if (as<KernelSections>()) return "kernel_sections";
    return "gegenbauer";
  }

  /// f evaluated at every row of x.
  Eigen::VectorXd operator()(const PointCloud& x) const {
    require(x.points().cols() == dim_.ambient(), ErrorCode::dimension_mismatch,
            "target lives on S^" + std::to_string(dim_.value()) + " but points have " +
                std::to_string(x.points().cols()) + " coordinates");
    const Eigen::Index m = x.size();
    if (as<Zero>()) return Eigen::VectorXd::Zero(m);
    if (const auto* ks = as<KernelSections>()) return cross_kernel(ks->kernel, x, ks->anchors).rowwise().sum();
    const auto& g = *as<GegenbauerDegree>();
    const double alpha = gegenbauer_alpha(dim_, g.convention);
    const Eigen::VectorXd inner = x.points() * g.xi;
    Eigen::VectorXd out(m);
    std::vector<double> pk;
    for (Eigen::Index i = 0; i < m; ++i) {
      gegenbauer_all(alpha, g.degree, std::clamp(inner(i), -1.0, 1.0), pk);
      out(i) = g.scale * pk.back();
    }
    return out;
  }

 private:
  using Variant = std::variant<Zero, KernelSections, GegenbauerDegree>;

  TargetFunction(SphereDim dim, Variant v) : dim_(dim), variant_(std::move(v)) {}

  SphereDim dim_;
  Variant variant_;
};

inline Eigen::VectorXd eval_target(const TargetFunction& f, const PointCloud& x) { return f(x); }

}  // namespace speclab
