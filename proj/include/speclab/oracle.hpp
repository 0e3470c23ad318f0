#pragma once

// Spectral quantities on a grouped spectrum: N1, N2, M2, a sampled M1 and the
// dominant-term risk M2 + sigma^2 N2 / n. No data, no matrices.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "speclab/error.hpp"
#include "speclab/filters.hpp"
#include "speclab/kernels.hpp"
#include "speclab/rates.hpp"
#include "speclab/spectrum.hpp"
#include "speclab/sphere.hpp"
#include "speclab/stats.hpp"
#include "speclab/targets.hpp"

namespace speclab {

/// Squared coefficient mass e_k of the target at every degree.
struct TargetCoefficients {
  std::vector<double> energies;
  double s = 1.0;
  double c0 = 1.0;           // min over populated degrees of mu_k^{-s} e_k
  double source_norm = 0.0;  // sum_k mu_k^{-s} e_k
};

/// e_k = mu_k^s for k <= q, 0 above.
inline TargetCoefficients source_coefficients(const SpectrumModel& spectrum, double s, int q) {
  require(s > 0.0, ErrorCode::domain, "s must be positive");
  require(q >= 0 && q <= spectrum.max_degree(), ErrorCode::precondition,
          "q must lie in [0, K] of the spectrum");
  TargetCoefficients out;
  out.s = s;
  out.energies.assign(spectrum.groups.size(), 0.0);
  for (int k = 0; k <= q; ++k) {
    const double mu = spectrum.eigenvalue(k);
    require(mu > 0.0, ErrorCode::precondition, "degree " + std::to_string(k) + " has a zero eigenvalue");
    out.energies[static_cast<std::size_t>(k)] = std::pow(mu, s);
  }
  out.c0 = 1.0;
  out.source_norm = q + 1.0;
  return out;
}

/// Degree energies of a concrete target under `spectrum`. Kernel sections
/// must use the kernel that produced the spectrum:
/// e_k = mu_k^2 N(d,k) sum_ij P_k(<u_i, u_j>).
inline TargetCoefficients target_energies(const TargetFunction& target, const SpectrumModel& spectrum, double s) {
  TargetCoefficients out;
  out.s = s;
  out.energies.assign(spectrum.groups.size(), 0.0);
  const SphereDim dim = target.dim();
  if (const auto* ks = target.as<TargetFunction::KernelSections>()) {
    const Eigen::MatrixXd inner = ks->anchors.points() * ks->anchors.points().transpose();
    const double alpha = gegenbauer_alpha(dim, GegenbauerConvention::ambient);
    std::vector<double> pk;
    std::vector<double> sums(spectrum.groups.size(), 0.0);
    for (Eigen::Index i = 0; i < inner.rows(); ++i)
      for (Eigen::Index j = 0; j < inner.cols(); ++j) {
        gegenbauer_all(alpha, spectrum.max_degree(), std::clamp(inner(i, j), -1.0, 1.0), pk);
        for (std::size_t k = 0; k < sums.size(); ++k) sums[k] += pk[k];
      }
    for (std::size_t k = 0; k < sums.size(); ++k) {
      const auto& g = spectrum.groups[k];
      out.energies[k] = std::max(0.0, g.eigenvalue * g.eigenvalue * g.multiplicity * sums[k]);
    }
  } else if (const auto* gd = target.as<TargetFunction::GegenbauerDegree>()) {
    require(gd->convention == GegenbauerConvention::ambient, ErrorCode::unsupported,
            "degree energies need the ambient Gegenbauer convention");
    if (gd->degree <= spectrum.max_degree())
      out.energies[static_cast<std::size_t>(gd->degree)] =
          gd->scale * gd->scale / spectrum.groups[static_cast<std::size_t>(gd->degree)].multiplicity;
  }
  out.c0 = std::numeric_limits<double>::infinity();
  out.source_norm = 0.0;
  for (std::size_t k = 0; k < out.energies.size(); ++k) {
    const double mu = spectrum.groups[k].eigenvalue;
    if (out.energies[k] == 0.0 || mu <= 0.0) continue;
    const double w = std::pow(mu, -s) * out.energies[k];
    out.source_norm += w;
    out.c0 = std::min(out.c0, w);
  }
  if (!std::isfinite(out.c0)) out.c0 = 0.0;
  return out;
}

namespace detail {

inline double effective_dimension(const SpectrumModel& spectrum, const FilterSpec& filter, int power) {
  double sum = 0.0;
  for (const auto& g : spectrum.groups) {
    const double v = g.eigenvalue * filter.phi(g.eigenvalue);
    sum += g.multiplicity * (power == 1 ? v : v * v);
  }
  return sum;
}

}  // namespace detail

/// N1 = sum_j lambda_j phi(lambda_j).
inline double n1(const SpectrumModel& spectrum, const FilterSpec& filter) {
  return detail::effective_dimension(spectrum, filter, 1);
}

/// N2 = sum_j (lambda_j phi(lambda_j))^2.
inline double n2(const SpectrumModel& spectrum, const FilterSpec& filter) {
  return detail::effective_dimension(spectrum, filter, 2);
}

/// M2 = sum_k psi(mu_k)^2 e_k.
inline double m2(const SpectrumModel& spectrum, const TargetCoefficients& target, const FilterSpec& filter) {
  require(target.energies.size() <= spectrum.groups.size(), ErrorCode::dimension_mismatch,
          "target has more degrees than the spectrum");
  double sum = 0.0;
  for (std::size_t k = 0; k < target.energies.size(); ++k) {
    if (target.energies[k] == 0.0) continue;
    const double psi = filter.psi(spectrum.groups[k].eigenvalue);
    sum += psi * psi * target.energies[k];
  }
  return sum;
}

/// M2 + sigma^2 N2 / n.
inline double theoretical_risk(const SpectrumModel& spectrum, const TargetCoefficients& target,
                               const FilterSpec& filter, double n, double sigma) {
  require(n >= 1.0, ErrorCode::precondition, "n must be >= 1");
  const double bias = m2(spectrum, target, filter);
  if (sigma == 0.0) return bias;
  return bias + sigma * sigma * n2(spectrum, filter) / n;
}

struct SampledSup {
  double value = 0.0;
  std::string note = "lower bound on the essential supremum";
};

/// max over sampled points of |f*(x) - f_lambda(x)|, f_lambda the population
/// filtered target. Only targets of finite degree are supported.
inline SampledSup m1_sampled(const InnerProductKernel& kernel, const TargetFunction& target, const FilterSpec& filter,
                             SphereDim dim, int sample_size, std::uint64_t seed) {
  require(sample_size >= 1, ErrorCode::precondition, "sample_size must be >= 1");
  require(target.dim().value() == dim.value(), ErrorCode::dimension_mismatch, "target lives on another sphere");
  SampledSup out;
  if (target.as<TargetFunction::Zero>()) return out;
  const auto* g = target.as<TargetFunction::GegenbauerDegree>();
  if (!g) throw Error(ErrorCode::unsupported, "M1 needs a target of finite degree; kernel sections are not");
  const SpectrumModel spectrum = funk_hecke_spectrum(kernel, dim, g->degree);
  const double psi = filter.psi(spectrum.eigenvalue(g->degree));
  const Eigen::VectorXd values = target(sample_uniform(dim, sample_size, seed));
  out.value = std::abs(psi) * values.cwiseAbs().maxCoeff();
  return out;
}

// ---------------------------------------------------------------------------

struct OraclePoint {
  double d = 0.0;
  double n = 0.0;
  double lambda = 0.0;
  double ell = 0.0;
  double m2 = 0.0;
  double n1 = 0.0;
  double n2 = 0.0;
  double risk = 0.0;
};

/// Idealized problem at dimension d: spectrum mu_k = d^{-k} up to K = p+3,
/// e_k = mu_k^s up to q = p+1, n = d^gamma, lambda = d^{-ell}.
inline OraclePoint oracle_point(double s, double gamma, double d, const FilterKind& kind, double ell,
                                double sigma = 1.0) {
  require(d > 1.0, ErrorCode::domain, "d must exceed 1");
  const int p = phase_index(s, gamma);
  const SpectrumModel spectrum = SpectrumModel::idealized(d, p + 3);
  const TargetCoefficients coeffs = source_coefficients(spectrum, s, p + 1);
  OraclePoint pt;
  pt.d = d;
  pt.n = std::pow(d, gamma);
  pt.ell = ell;
  pt.lambda = std::pow(d, -ell);
  const FilterSpec filter(kind, pt.lambda);
  pt.m2 = m2(spectrum, coeffs, filter);
  pt.n1 = n1(spectrum, filter);
  pt.n2 = n2(spectrum, filter);
  pt.risk = pt.m2 + sigma * sigma * pt.n2 / pt.n;
  return pt;
}

struct SlopeFitResult {
  double fitted_slope = 0.0;
  double theory_slope = 0.0;
  double abs_diff = 0.0;
  double ell = 0.0;
  std::vector<OraclePoint> points;
};

/// Log-log slope of the theoretical risk at the balanced lambda across d_list;
/// the qualification comes from the filter family.
inline SlopeFitResult risk_slope_fit(double s, double gamma, const std::vector<double>& d_list, const FilterKind& kind) {
  require(d_list.size() >= 4, ErrorCode::precondition, "d_list needs at least 4 entries");
  const double tau = kind.qualification();
  SlopeFitResult out;
  out.ell = balanced_lambda_exponent(s, tau, gamma).ell;
  std::vector<std::pair<double, double>> pts;
  for (double d : d_list) {
    out.points.push_back(oracle_point(s, gamma, d, kind, out.ell));
    pts.emplace_back(d, out.points.back().risk);
  }
  out.fitted_slope = fit_rate_loglog(pts).slope;
  out.theory_slope = -spectral_rate_exponent(RateQuery(s, tau, gamma)).exponent;
  out.abs_diff = std::abs(out.fitted_slope - out.theory_slope);
  return out;
}

}  // namespace speclab
