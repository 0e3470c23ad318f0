#pragma once

// Inner-product kernels K(x, x') = Phi(<x, x'>) on the sphere and the
// kernel matrices built from them.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "speclab/error.hpp"
#include "speclab/sphere.hpp"

namespace speclab {

enum class KernelFamily { rbf, ntk, power_series, custom };

class InnerProductKernel {
 public:
  /// exp(-|x - x'|^2 / 2) on the sphere, written as Phi(t) = exp(t - 1).
  static InnerProductKernel rbf() { return InnerProductKernel(KernelFamily::rbf, "rbf"); }

  /// Two-layer ReLU NTK: Phi(t) = [sin(arccos t) + 2 (pi - arccos t) t] / (2 pi).
  static InnerProductKernel ntk() { return InnerProductKernel(KernelFamily::ntk, "ntk"); }

  /// Phi(t) = sum_j a_j t^j with every a_j >= 0.
  static InnerProductKernel power_series(std::vector<double> coefficients) {
    require(!coefficients.empty(), ErrorCode::precondition, "power series needs at least one coefficient");
    for (std::size_t j = 0; j < coefficients.size(); ++j)
      require(coefficients[j] >= 0.0 && std::isfinite(coefficients[j]), ErrorCode::precondition,
              "power series coefficient a_" + std::to_string(j) + " must be finite and non-negative");
    InnerProductKernel k(KernelFamily::power_series, "power_series");
    k.coefficients_ = std::move(coefficients);
    k.kappa_sq_ = k.eval_unchecked(1.0);
    return k;
  }

  /// Arbitrary profile; positivity is not verified here (funk_hecke_spectrum
  /// reports indefiniteness).
  static InnerProductKernel custom(std::string name, std::function<double(double)> phi) {
    require(static_cast<bool>(phi), ErrorCode::precondition, "custom kernel needs a callable");
    InnerProductKernel k(KernelFamily::custom, std::move(name));
    k.profile_ = std::move(phi);
    k.kappa_sq_ = k.eval_unchecked(1.0);
    require(std::isfinite(k.kappa_sq_), ErrorCode::domain, "custom kernel is not finite at t = 1");
    return k;
  }

  KernelFamily family() const noexcept { return family_; }
  const std::string& name() const noexcept { return name_; }
  const std::vector<double>& coefficients() const noexcept { return coefficients_; }

  /// sup_x K(x, x) = Phi(1).
  double kappa_sq() const noexcept { return kappa_sq_; }

  /// Phi(t); arguments within 1e-12 outside [-1, 1] are clamped.
  double operator()(double t) const { return eval_unchecked(clamp_unit(t, "phi_eval")); }

  /// Phi without the domain check; `t` must already lie in [-1, 1].
  double eval_unchecked(double t) const {
    switch (family_) {
      case KernelFamily::rbf: return std::exp(t - 1.0);
      case KernelFamily::ntk: {
        const double angle = std::acos(t);
        return (std::sqrt(std::max(0.0, 1.0 - t * t)) + 2.0 * (std::numbers::pi - angle) * t) /
               (2.0 * std::numbers::pi);
      }
      case KernelFamily::power_series: {
        double acc = 0.0;
        for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) acc = acc * t + *it;
        return acc;
      }
      case KernelFamily::custom: return profile_(t);
    }
    return 0.0;
  }

 private:
  InnerProductKernel(KernelFamily family, std::string name) : family_(family), name_(std::move(name)) {
    if (family == KernelFamily::rbf || family == KernelFamily::ntk) kappa_sq_ = 1.0;
  }

  KernelFamily family_;
  std::string name_;
  std::vector<double> coefficients_;
  std::function<double(double)> profile_;
  double kappa_sq_ = 1.0;
};

inline double phi_eval(const InnerProductKernel& kernel, double t) { return kernel(t); }

/// Builds a kernel from its config name: "rbf", "ntk" or "power_series".
inline InnerProductKernel kernel_from_name(std::string_view name, const std::vector<double>& coeffs = {}) {
  if (name == "rbf") return InnerProductKernel::rbf();
  if (name == "ntk") return InnerProductKernel::ntk();
  if (name == "power_series") return InnerProductKernel::power_series(coeffs);
  throw Error(ErrorCode::config, "unknown kernel '" + std::string(name) + "' (expected rbf, ntk or power_series)");
}

// ---------------------------------------------------------------------------
// Taylor coefficients at 0

struct PowerSeriesCoefficients {
  std::vector<double> values;     // a_0 .. a_J
  std::vector<bool> is_zero;      // |a_j| <= 1e-10
  double digits_lost = 0.0;       // only non-zero for the Chebyshev route
};

namespace detail {

// Exact series of the NTK profile: 2 pi Phi(t) = sqrt(1 - t^2) + pi t + 2 t arcsin(t).
inline std::vector<double> ntk_taylor(int max_order) {
  std::vector<double> a(static_cast<std::size_t>(max_order + 1), 0.0);
  const double two_pi = 2.0 * std::numbers::pi;
  double sqrt_coeff = 1.0;    // coefficient of t^{2m} in sqrt(1 - t^2)
  double arcsin_coeff = 1.0;  // coefficient of t^{2m+1} in arcsin(t)
  for (int m = 0; 2 * m <= max_order; ++m) {
    if (m > 0) {
      sqrt_coeff *= -(0.5 - (m - 1)) / m;
      // c_m / c_{m-1} = (2m-1)^2 / (2m (2m+1))
      arcsin_coeff *= (2.0 * m - 1.0) * (2.0 * m - 1.0) / (2.0 * m * (2.0 * m + 1.0));
    }
    a[static_cast<std::size_t>(2 * m)] += sqrt_coeff / two_pi;
    if (2 * m + 2 <= max_order) a[static_cast<std::size_t>(2 * m + 2)] += 2.0 * arcsin_coeff / two_pi;
  }
  if (max_order >= 1) a[1] = 0.5;
  return a;
}

// Taylor coefficients of a profile analytic near 0 by Chebyshev interpolation
// on [-r, r], chopped at the noise floor, then converted to monomials.
inline std::vector<double> chebyshev_taylor(const std::function<double(double)>& phi, int max_order, double radius,
                                            double& digits_lost) {
  const int samples = std::max(256, 4 * max_order);
  std::vector<double> fx(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k)
    fx[static_cast<std::size_t>(k)] = phi(radius * std::cos(std::numbers::pi * (k + 0.5) / samples));
  std::vector<double> c(static_cast<std::size_t>(samples));
  double cmax = 0.0;
  for (int n = 0; n < samples; ++n) {
    double acc = 0.0;
    for (int k = 0; k < samples; ++k)
      acc += fx[static_cast<std::size_t>(k)] * std::cos(std::numbers::pi * n * (k + 0.5) / samples);
    c[static_cast<std::size_t>(n)] = (n == 0 ? 1.0 : 2.0) * acc / samples;
    cmax = std::max(cmax, std::abs(c[static_cast<std::size_t>(n)]));
  }
  int last = 0;
  for (int n = 0; n < samples; ++n)
    if (std::abs(c[static_cast<std::size_t>(n)]) > 1e-13 * cmax) last = n;

  // Monomial coefficients of T_0..T_last in u = t / r.
  const auto width = static_cast<std::size_t>(last + 1);
  std::vector<std::vector<double>> mono(width, std::vector<double>(width, 0.0));
  mono[0][0] = 1.0;
  if (last >= 1) mono[1][1] = 1.0;
  for (std::size_t n = 1; n + 1 < width; ++n)
    for (std::size_t j = 0; j < width; ++j)
      mono[n + 1][j] = (j > 0 ? 2.0 * mono[n][j - 1] : 0.0) - mono[n - 1][j];

  std::vector<double> a(static_cast<std::size_t>(max_order + 1), 0.0);
  digits_lost = 0.0;
  for (int j = 0; j <= max_order; ++j) {
    double acc = 0.0, gross = 0.0;
    for (std::size_t n = static_cast<std::size_t>(j); n < width; ++n) {
      acc += c[n] * mono[n][static_cast<std::size_t>(j)];
      gross += std::abs(c[n] * mono[n][static_cast<std::size_t>(j)]);
    }
    const double scale = std::pow(radius, -j);
    a[static_cast<std::size_t>(j)] = acc * scale;
    // relative errors of size eps in the c_n reach a_j amplified by this
    digits_lost = std::max(digits_lost, std::log10(std::max(gross, cmax) * scale / cmax));
  }
  return a;
}

}  // namespace detail

/// Taylor coefficients a_0..a_J of Phi at 0. RBF and NTK use their exact
/// series, power series return the stored coefficients and custom profiles
/// go through Chebyshev projection (ErrorCode::ill_conditioned when the
/// monomial conversion amplifies errors by more than 10^6).
inline PowerSeriesCoefficients power_series_coefficients(const InnerProductKernel& kernel, int max_order) {
  require(max_order >= 0, ErrorCode::precondition, "J must be >= 0");
  PowerSeriesCoefficients out;
  switch (kernel.family()) {
    case KernelFamily::rbf: {
      out.values.resize(static_cast<std::size_t>(max_order + 1));
      double term = std::exp(-1.0);
      for (int j = 0; j <= max_order; ++j) {
        if (j > 0) term /= j;
        out.values[static_cast<std::size_t>(j)] = term;
      }
      break;
    }
    case KernelFamily::ntk: out.values = detail::ntk_taylor(max_order); break;
    case KernelFamily::power_series: {
      out.values.assign(static_cast<std::size_t>(max_order + 1), 0.0);
      const auto& c = kernel.coefficients();
      std::copy_n(c.begin(), std::min(c.size(), out.values.size()), out.values.begin());
      break;
    }
    case KernelFamily::custom: {
      out.values = detail::chebyshev_taylor([&](double t) { return kernel.eval_unchecked(t); }, max_order, 0.5,
                                            out.digits_lost);
      if (out.digits_lost > 6.0)
        throw Error(ErrorCode::ill_conditioned, "Chebyshev-to-monomial conversion loses " +
                                                    std::to_string(out.digits_lost) + " digits at J = " +
                                                    std::to_string(max_order));
      break;
    }
  }
  out.is_zero.resize(out.values.size());
  for (std::size_t j = 0; j < out.values.size(); ++j) out.is_zero[j] = std::abs(out.values[j]) <= 1e-10;
  return out;
}

// ---------------------------------------------------------------------------
// Kernel matrices

struct GramMatrix {
  Eigen::MatrixXd values;
  std::string kernel_name;
  std::uint64_t fingerprint = 0;
};

/// FNV-1a over the raw coordinates; identifies the point cloud a Gram
/// matrix was built from.
inline std::uint64_t fingerprint(const PointCloud& x) {
  std::uint64_t h = 1469598103934665603ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(x.points().data());
  const auto count = static_cast<std::size_t>(x.points().size()) * sizeof(double);
  for (std::size_t i = 0; i < count; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

/// values(i, j) = Phi(<x_i, x_j>); the upper triangle is computed and mirrored.
inline GramMatrix gram_matrix(const InnerProductKernel& kernel, const PointCloud& x) {
  const Eigen::Index n = x.size();
  const Eigen::MatrixXd& p = x.points();
  GramMatrix g;
  g.kernel_name = kernel.name();
  g.fingerprint = fingerprint(x);
  const Eigen::MatrixXd inner = p * p.transpose();
  g.values.resize(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double v = kernel(std::clamp(inner(i, j), -1.0, 1.0));
      g.values(i, j) = v;
      g.values(j, i) = v;
    }
  }
  return g;
}

/// Entry (i, j) = Phi(<x_eval_i, x_train_j>).
inline Eigen::MatrixXd cross_kernel(const InnerProductKernel& kernel, const PointCloud& x_eval,
                                    const PointCloud& x_train) {
  require(x_eval.points().cols() == x_train.points().cols(), ErrorCode::dimension_mismatch,
          "cross_kernel: evaluation and training points live in different dimensions");
  Eigen::MatrixXd inner = x_eval.points() * x_train.points().transpose();
  for (Eigen::Index j = 0; j < inner.cols(); ++j)
    for (Eigen::Index i = 0; i < inner.rows(); ++i) inner(i, j) = kernel(std::clamp(inner(i, j), -1.0, 1.0));
  return inner;
}

}  // namespace speclab
