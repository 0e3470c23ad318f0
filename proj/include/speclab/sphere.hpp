#pragma once

// Geometry and harmonic analysis on the unit sphere S^d in R^{d+1}.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "speclab/error.hpp"
#include "speclab/spectrum.hpp"

namespace speclab {

/// Intrinsic dimension d of S^d; points carry d + 1 coordinates.
class SphereDim {
 public:
  explicit SphereDim(int d) : d_(d) {
    require(d >= 1, ErrorCode::precondition, "sphere dimension must be >= 1, got " + std::to_string(d));
  }

  int value() const noexcept { return d_; }
  int ambient() const noexcept { return d_ + 1; }

  friend bool operator==(SphereDim, SphereDim) = default;

 private:
  int d_;
};

// ---------------------------------------------------------------------------
// Harmonic multiplicities

namespace detail {

using u128 = unsigned __int128;

inline bool checked_mul(u128 a, u128 b, u128& out) { return !__builtin_mul_overflow(a, b, &out); }

// binom(n, r) with overflow detection; every partial product is itself a
// binomial coefficient times r, so exact division is safe.
inline std::optional<u128> binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) return u128{0};
  r = std::min(r, n - r);
  u128 c = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    u128 next;
    if (!checked_mul(c, n - r + i, next)) return std::nullopt;
    c = next / i;
  }
  return c;
}

}  // namespace detail

/// Exact N(d, k): N(d,0) = 1 and N(d,k) = (2k+d-1)/k * binom(k+d-2, k-1).
/// Throws ErrorCode::overflow when the value does not fit in 64 bits.
inline std::uint64_t harmonic_multiplicity(SphereDim dim, int k) {
  require(k >= 0, ErrorCode::precondition, "harmonic degree must be >= 0");
  if (k == 0) return 1;
  const auto d = static_cast<std::uint64_t>(dim.value());
  const auto deg = static_cast<std::uint64_t>(k);
  const auto c = detail::binomial(deg + d - 2, deg - 1);
  detail::u128 num;
  if (!c || !detail::checked_mul(*c, 2 * deg + d - 1, num))
    throw Error(ErrorCode::overflow, "N(d,k) overflows for d=" + std::to_string(d) + ", k=" + std::to_string(k));
  const detail::u128 n = num / deg;
  if (n > static_cast<detail::u128>(UINT64_MAX))
    throw Error(ErrorCode::overflow, "N(d,k) exceeds 64 bits for d=" + std::to_string(d) + ", k=" + std::to_string(k));
  return static_cast<std::uint64_t>(n);
}

struct HarmonicCount {
  double value = 0.0;                 // always available
  std::optional<std::uint64_t> exact;  // present when it fits in 64 bits
};

/// Multiplicity as a floating count, with the exact integer when it fits.
inline HarmonicCount harmonic_count(SphereDim dim, int k) {
  HarmonicCount out;
  try {
    out.exact = harmonic_multiplicity(dim, k);
    out.value = static_cast<double>(*out.exact);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::overflow) throw;
    const double d = dim.value();
    out.value = (2.0 * k + d - 1.0) / k *
                std::exp(std::lgamma(k + d - 1.0) - std::lgamma(d) - std::lgamma(static_cast<double>(k)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalized Gegenbauer polynomials

/// Which Gegenbauer index a "P_k on S^d" refers to. `ambient` uses
/// alpha = (d-1)/2, the harmonics of S^d in R^{d+1}; `intrinsic` uses
/// alpha = (d-2)/2, under which P_2(t) = (d t^2 - 1)/(d - 1).
enum class GegenbauerConvention { ambient, intrinsic };

inline double gegenbauer_alpha(SphereDim dim, GegenbauerConvention convention) {
  const double alpha = convention == GegenbauerConvention::ambient ? (dim.value() - 1) / 2.0 : (dim.value() - 2) / 2.0;
  require(alpha >= 0.0, ErrorCode::precondition, "intrinsic Gegenbauer convention needs d >= 2");
  return alpha;
}

inline double clamp_unit(double t, const char* who) {
  if (!(std::abs(t) <= 1.0 + 1e-12))
    throw Error(ErrorCode::domain, std::string(who) + ": argument " + std::to_string(t) + " outside [-1, 1]");
  return std::clamp(t, -1.0, 1.0);
}

/// P_0(t), ..., P_K(t) with P_k(1) = 1, via the normalized three-term
/// recurrence P_{k+1} = [2(k+alpha) t P_k - k P_{k-1}] / (k + 2 alpha).
inline void gegenbauer_all(double alpha, int max_degree, double t, std::vector<double>& out) {
  out.assign(static_cast<std::size_t>(max_degree + 1), 1.0);
  if (max_degree >= 1) out[1] = t;
  for (int k = 1; k < max_degree; ++k) {
    const auto i = static_cast<std::size_t>(k);
    out[i + 1] = (2.0 * (k + alpha) * t * out[i] - k * out[i - 1]) / (k + 2.0 * alpha);
  }
}

inline double gegenbauer(SphereDim dim, int k, double t,
                         GegenbauerConvention convention = GegenbauerConvention::ambient) {
  require(k >= 0, ErrorCode::precondition, "harmonic degree must be >= 0");
  t = clamp_unit(t, "gegenbauer");
  std::vector<double> values;
  gegenbauer_all(gegenbauer_alpha(dim, convention), k, t, values);
  return values.back();
}

// ---------------------------------------------------------------------------
// Point clouds

/// n points on S^d stored as rows of an n x (d+1) matrix.
class PointCloud {
 public:
  PointCloud() = default;

  /// Validates that every row has unit norm within 1e-12.
  PointCloud(Eigen::MatrixXd points, std::uint64_t seed = 0) : points_(std::move(points)), seed_(seed) {
    require(points_.cols() >= 2, ErrorCode::precondition, "points need at least 2 coordinates (S^1 in R^2)");
    for (Eigen::Index i = 0; i < points_.rows(); ++i) {
      const double norm = points_.row(i).norm();
      require(std::abs(norm - 1.0) <= 1e-12, ErrorCode::domain,
              "row " + std::to_string(i) + " is not on the unit sphere (norm " + std::to_string(norm) + ")");
    }
  }

  /// Normalizes each row before storing; rows must be non-zero.
  static PointCloud normalized(Eigen::MatrixXd points, std::uint64_t seed = 0) {
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const double norm = points.row(i).norm();
      require(norm > 0.0, ErrorCode::domain, "cannot normalize a zero row");
      points.row(i) /= norm;
    }
    return PointCloud(std::move(points), seed);
  }

  /// An empty cloud with a known dimension (used for m = 0 evaluations).
  static PointCloud empty(SphereDim dim) { return PointCloud(Eigen::MatrixXd(0, dim.ambient())); }

  const Eigen::MatrixXd& points() const noexcept { return points_; }
  Eigen::Index size() const noexcept { return points_.rows(); }
  SphereDim dim() const { return SphereDim(static_cast<int>(points_.cols()) - 1); }
  std::uint64_t seed() const noexcept { return seed_; }
  auto row(Eigen::Index i) const { return points_.row(i); }

  /// Subset of rows in the given order.
  PointCloud select(const std::vector<Eigen::Index>& rows) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), points_.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = points_.row(rows[i]);
    PointCloud pc;
    pc.points_ = std::move(out);
    pc.seed_ = seed_;
    return pc;
  }

 private:
  Eigen::MatrixXd points_;
  std::uint64_t seed_ = 0;
};

/// Draws n uniform points from an existing engine.
template <class Engine>
PointCloud sample_uniform_with(SphereDim dim, Eigen::Index n, Engine& engine, std::uint64_t seed_tag = 0) {
  require(n >= 0, ErrorCode::precondition, "sample size must be non-negative");
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd points(n, dim.ambient());
  for (Eigen::Index i = 0; i < n; ++i) {
    double norm2 = 0.0;
    do {
      for (int j = 0; j < dim.ambient(); ++j) points(i, j) = normal(engine);
      norm2 = points.row(i).squaredNorm();
    } while (norm2 == 0.0);
    points.row(i) /= std::sqrt(norm2);
  }
  return PointCloud(std::move(points), seed_tag);
}

/// n independent uniform points on S^d (normalized Gaussian vectors),
/// fully determined by `seed`.
inline PointCloud sample_uniform(SphereDim dim, Eigen::Index n, std::uint64_t seed) {
  require(n >= 1, ErrorCode::precondition, "sample_uniform needs n >= 1");
  std::mt19937_64 engine(seed);
  return sample_uniform_with(dim, n, engine, seed);
}

// ---------------------------------------------------------------------------
// Quadrature and the Funk-Hecke spectrum

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre rule of the given order on [-1, 1] (Newton on P_n).
inline QuadratureRule gauss_legendre(int order) {
  require(order >= 1, ErrorCode::precondition, "quadrature order must be >= 1");
  QuadratureRule rule;
  rule.nodes.assign(static_cast<std::size_t>(order), 0.0);
  rule.weights.assign(static_cast<std::size_t>(order), 2.0);
  if (order == 1) return rule;
  for (int i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double dp = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) <= 1e-15) break;
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(order - 1 - i);
    rule.nodes[lo] = -x;
    rule.nodes[hi] = x;
    rule.weights[lo] = w;
    rule.weights[hi] = w;
  }
  return rule;
}

/// omega_{d-1} / omega_d, the normalizing constant of the Funk-Hecke integral.
inline double surface_ratio(SphereDim dim) {
  const double d = dim.value();
  return std::exp(std::lgamma((d + 1.0) / 2.0) - std::lgamma(d / 2.0)) / std::sqrt(std::numbers::pi);
}

/// Integral of g(t) (1-t^2)^{(d-2)/2} over [-1,1], done in the angle variable
/// t = cos(theta) so the weight becomes sin^{d-1}(theta).
template <class Integrand>
double spherical_weighted_integral(SphereDim dim, const QuadratureRule& rule, Integrand&& g) {
  const double half_pi = std::numbers::pi / 2.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double theta = half_pi * (rule.nodes[i] + 1.0);
    const double s = std::sin(theta);
    const double w = dim.value() == 1 ? 1.0 : std::pow(s, dim.value() - 1);
    acc += rule.weights[i] * half_pi * w * g(std::cos(theta));
  }
  return acc;
}

struct FunkHeckeOptions {
  int quad_order = 0;  // 0 selects max(64, 4K)
  double convergence_rtol = 1e-8;
  double convergence_atol = 1e-14;  // relative to max |Phi| on the nodes
  double clamp_rtol = 1e-10;        // negatives above -clamp_rtol * mu_0 become 0
};

namespace detail {

template <class Profile>
std::vector<double> funk_hecke_raw(const Profile& phi, SphereDim dim, int max_degree, int order, double& phi_scale) {
  const QuadratureRule rule = gauss_legendre(order);
  const double alpha = gegenbauer_alpha(dim, GegenbauerConvention::ambient);
  const double ratio = surface_ratio(dim);
  const double half_pi = std::numbers::pi / 2.0;
  std::vector<double> mu(static_cast<std::size_t>(max_degree + 1), 0.0);
  std::vector<double> pk;
  phi_scale = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double theta = half_pi * (rule.nodes[i] + 1.0);
    const double t = std::cos(theta);
    const double w = rule.weights[i] * half_pi * (dim.value() == 1 ? 1.0 : std::pow(std::sin(theta), dim.value() - 1));
    const double value = phi(t);
    phi_scale = std::max(phi_scale, std::abs(value));
    gegenbauer_all(alpha, max_degree, t, pk);
    for (std::size_t k = 0; k < mu.size(); ++k) mu[k] += w * value * pk[k];
  }
  for (auto& m : mu) m *= ratio;
  return mu;
}

}  // namespace detail

/// Eigenvalues mu_0..mu_K of the integral operator of K(x,x') = Phi(<x,x'>)
/// under the uniform measure on S^d, grouped with multiplicities N(d,k).
///
/// The integral is evaluated at `quad_order` and at twice that order; any
/// relative change above 1e-8 raises ErrorCode::quadrature. Values below
/// -1e-10 mu_0 raise ErrorCode::indefinite, smaller negatives are clamped.
template <class Profile>
SpectrumModel funk_hecke_spectrum(const Profile& phi, SphereDim dim, int max_degree, FunkHeckeOptions options = {}) {
  require(max_degree >= 0, ErrorCode::precondition, "max_degree must be >= 0");
  const int order = options.quad_order > 0 ? options.quad_order : std::max(64, 4 * max_degree);
  require(order >= max_degree + 2, ErrorCode::precondition, "quad_order must be >= K + 2");

  double scale = 0.0, scale2 = 0.0;
  const auto coarse = detail::funk_hecke_raw(phi, dim, max_degree, order, scale);
  const auto fine = detail::funk_hecke_raw(phi, dim, max_degree, 2 * order, scale2);
  scale = std::max(scale, scale2);

  for (std::size_t k = 0; k < fine.size(); ++k) {
    const double diff = std::abs(fine[k] - coarse[k]);
    if (diff > options.convergence_rtol * std::abs(fine[k]) + options.convergence_atol * scale)
      throw Error(ErrorCode::quadrature, "Funk-Hecke quadrature not converged at degree " + std::to_string(k) +
                                             " (order " + std::to_string(order) + ")");
  }

  const double reference = fine[0] > 0.0 ? fine[0] : scale;
  SpectrumModel out;
  out.origin = SpectrumOrigin::funk_hecke;
  out.sphere_dim = dim.value();
  for (int k = 0; k <= max_degree; ++k) {
    double mu = fine[static_cast<std::size_t>(k)];
    if (mu < 0.0) {
      if (mu < -options.clamp_rtol * reference)
        throw Error(ErrorCode::indefinite, "kernel is indefinite: mu_" + std::to_string(k) + " = " + std::to_string(mu));
      mu = 0.0;
    }
    out.groups.push_back({k, mu, harmonic_count(dim, k).value});
  }
  out.tail_mass = phi(1.0) - out.trace();
  return out;
}

/// Truncated Mercer series sum_{k<=K} mu_k N(d,k) P_k(t).
inline double mercer_reconstruct(const SpectrumModel& spectrum, SphereDim dim, double t) {
  require(spectrum.sphere_dim == 0 || spectrum.sphere_dim == dim.value(), ErrorCode::dimension_mismatch,
          "spectrum was built for a different sphere");
  t = clamp_unit(t, "mercer_reconstruct");
  std::vector<double> pk;
  gegenbauer_all(gegenbauer_alpha(dim, GegenbauerConvention::ambient), spectrum.max_degree(), t, pk);
  double acc = 0.0;
  for (const auto& g : spectrum.groups) acc += g.eigenvalue * g.multiplicity * pk[static_cast<std::size_t>(g.degree)];
  return acc;
}

}  // namespace speclab
