#pragma once

// Spectral filter functions phi_lambda, their remainders psi_lambda = 1 - z phi_lambda
// and a grid-based falsification check of the filter axioms.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "speclab/error.hpp"

namespace speclab {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class FilterFamily { krr, iterated_ridge, gradient_flow, gradient_descent };

inline std::string_view to_string(FilterFamily family) {
  switch (family) {
    case FilterFamily::krr: return "krr";
    case FilterFamily::iterated_ridge: return "iterated_ridge";
    case FilterFamily::gradient_flow: return "gradient_flow";
    case FilterFamily::gradient_descent: return "gradient_descent";
  }
  return "krr";
}

inline FilterFamily filter_family_from_name(std::string_view name) {
  if (name == "krr") return FilterFamily::krr;
  if (name == "iterated_ridge") return FilterFamily::iterated_ridge;
  if (name == "gradient_flow") return FilterFamily::gradient_flow;
  if (name == "gradient_descent") return FilterFamily::gradient_descent;
  throw Error(ErrorCode::config, "unknown filter '" + std::string(name) +
                                     "' (expected krr, iterated_ridge, gradient_flow or gradient_descent)");
}

/// A filter family without its regularization level: the family plus q
/// (iterated ridge) or the step size eta (gradient descent).
struct FilterKind {
  FilterFamily family = FilterFamily::krr;
  int q = 1;
  double eta = 0.0;

  static FilterKind krr() { return {FilterFamily::krr, 1, 0.0}; }
  static FilterKind iterated_ridge(int q) { return {FilterFamily::iterated_ridge, q, 0.0}; }
  static FilterKind gradient_flow() { return {FilterFamily::gradient_flow, 1, 0.0}; }
  static FilterKind gradient_descent(double eta) { return {FilterFamily::gradient_descent, 1, eta}; }

  /// tau: 1 for KRR, q for iterated ridge, infinity for the flows.
  double qualification() const {
    switch (family) {
      case FilterFamily::krr: return 1.0;
      case FilterFamily::iterated_ridge: return q;
      case FilterFamily::gradient_flow:
      case FilterFamily::gradient_descent: return kInfinity;
    }
    return 1.0;
  }

  std::string label() const {
    switch (family) {
      case FilterFamily::iterated_ridge: return "iterated_ridge(q=" + std::to_string(q) + ")";
      case FilterFamily::gradient_descent: {
        std::ostringstream os;
        os << "gradient_descent(eta=" << eta << ")";
        return os.str();
      }
      default: return std::string(to_string(family));
    }
  }
};

/// A filter family at a fixed regularization level lambda. Gradient flow runs
/// for time t = 1/lambda and gradient descent for t = 1/(eta lambda) steps
/// (real t allowed). lambda = +inf is accepted and gives the zero filter.
class FilterSpec {
 public:
  FilterSpec(FilterKind kind, double lambda) : kind_(kind), lambda_(lambda) {
    require(lambda > 0.0, ErrorCode::precondition, "lambda must be positive");
    require(kind.q >= 1, ErrorCode::precondition, "iterated ridge needs q >= 1");
    if (kind.family == FilterFamily::gradient_descent)
      require(kind.eta > 0.0 && std::isfinite(kind.eta), ErrorCode::precondition, "gradient descent needs eta > 0");
  }

  static FilterSpec krr(double lambda) { return {FilterKind::krr(), lambda}; }
  static FilterSpec iterated_ridge(int q, double lambda) { return {FilterKind::iterated_ridge(q), lambda}; }
  static FilterSpec gradient_flow(double lambda) { return {FilterKind::gradient_flow(), lambda}; }
  static FilterSpec gradient_descent(double eta, double lambda) { return {FilterKind::gradient_descent(eta), lambda}; }

  /// Gradient flow stopped at time t >= 0 (t = 0 is the zero estimator).
  static FilterSpec gradient_flow_time(double t) {
    require(t >= 0.0, ErrorCode::precondition, "stopping time must be >= 0");
    return gradient_flow(t == 0.0 ? kInfinity : 1.0 / t);
  }

  const FilterKind& kind() const noexcept { return kind_; }
  FilterFamily family() const noexcept { return kind_.family; }
  double lambda() const noexcept { return lambda_; }
  double qualification() const { return kind_.qualification(); }

  /// Inside the nominal range (0, 1) of the axioms; larger lambda is accepted.
  bool lambda_in_nominal_range() const noexcept { return lambda_ < 1.0; }

  /// Flow time (gradient flow) or step count (gradient descent).
  double time() const {
    switch (kind_.family) {
      case FilterFamily::gradient_flow: return 1.0 / lambda_;
      case FilterFamily::gradient_descent: return 1.0 / (kind_.eta * lambda_);
      default: return 1.0 / lambda_;
    }
  }

  /// phi_lambda(z) for z >= 0, with the removable singularity at 0 evaluated
  /// by its limit (series branch below 1e-8 lambda).
  double phi(double z) const {
    require(z >= 0.0, ErrorCode::domain, "filter argument must be >= 0");
    if (std::isinf(lambda_)) return 0.0;
    const double lambda = lambda_;
    const bool tiny = z < 1e-8 * lambda;
    switch (kind_.family) {
      case FilterFamily::krr: return 1.0 / (z + lambda);
      case FilterFamily::iterated_ridge: {
        const double q = kind_.q;
        if (tiny) return q / lambda * (1.0 - (q + 1.0) / 2.0 * z / lambda);
        return -std::expm1(-q * std::log1p(z / lambda)) / z;
      }
      case FilterFamily::gradient_flow: {
        const double t = time();
        if (tiny) return t * (1.0 - t * z / 2.0);
        return -std::expm1(-t * z) / z;
      }
      case FilterFamily::gradient_descent: {
        const double eta = kind_.eta, t = time();
        check_gd_range(z);
        if (tiny) return eta * t * (1.0 - (t - 1.0) * eta * z / 2.0);
        if (eta * z == 1.0) return 1.0 / z;
        return -std::expm1(t * std::log1p(-eta * z)) / z;
      }
    }
    return 0.0;
  }

  /// psi_lambda(z) = 1 - z phi_lambda(z), from the closed forms.
  double psi(double z) const {
    require(z >= 0.0, ErrorCode::domain, "filter argument must be >= 0");
    if (std::isinf(lambda_)) return 1.0;
    const double lambda = lambda_;
    switch (kind_.family) {
      case FilterFamily::krr: return lambda / (z + lambda);
      case FilterFamily::iterated_ridge: return std::exp(-kind_.q * std::log1p(z / lambda));
      case FilterFamily::gradient_flow: return std::exp(-time() * z);
      case FilterFamily::gradient_descent: {
        check_gd_range(z);
        if (kind_.eta * z == 1.0) return 0.0;
        return std::exp(time() * std::log1p(-kind_.eta * z));
      }
    }
    return 1.0;
  }

  std::string label() const { return kind_.label() + "[lambda=" + std::to_string(lambda_) + "]"; }

 private:
  void check_gd_range(double z) const {
    if (kind_.eta * z > 1.0)
      throw Error(ErrorCode::step_size, "gradient descent needs 1 - eta z >= 0 (eta z = " +
                                            std::to_string(kind_.eta * z) + ")");
  }

  FilterKind kind_;
  double lambda_;
};

inline double phi_lambda(const FilterSpec& filter, double z) { return filter.phi(z); }
inline double psi_lambda(const FilterSpec& filter, double z) { return filter.psi(z); }
inline double qualification(const FilterSpec& filter) { return filter.qualification(); }

// ---------------------------------------------------------------------------
// Axiom checks

struct AxiomViolation {
  std::string axiom;
  double lambda = 0.0;
  double z = 0.0;
  double value = 0.0;
};

/// Result of probing the filter axioms on a finite (z, lambda) grid.
/// constants[i] holds the tightest empirical value of constant i (1..8);
/// NaN marks a constant that was not estimated.
struct FilterAxiomReport {
  std::string family;
  bool monotonicity_ok = true;  // item 1
  bool qualification_ok = true; // item 2
  bool finite_case_ok = true;   // item 3
  bool finite_case_applicable = true;
  std::string finite_case_note;
  std::array<double, 9> constants{};
  std::vector<AxiomViolation> violations;

  bool passed() const { return monotonicity_ok && qualification_ok && finite_case_ok; }
};

struct AxiomGrid {
  std::vector<double> lambdas;
  std::vector<double> zs;
  double kappa_sq = 1.0;
};

inline std::vector<double> log_space(double lo, double hi, int count) {
  require(lo > 0.0 && hi >= lo && count >= 1, ErrorCode::precondition, "log_space needs 0 < lo <= hi, count >= 1");
  std::vector<double> out(static_cast<std::size_t>(count));
  if (count == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
  out.back() = hi;
  return out;
}

/// 20 log-spaced lambdas in [1e-3, 0.5] and 200 log-spaced z in [1e-8, kappa^2], plus z = 0.
inline AxiomGrid default_axiom_grid(double kappa_sq = 1.0) {
  AxiomGrid g;
  g.kappa_sq = kappa_sq;
  g.lambdas = log_space(1e-3, 0.5, 20);
  g.zs = log_space(1e-8, kappa_sq, 200);
  g.zs.insert(g.zs.begin(), 0.0);
  return g;
}

namespace detail {

constexpr double kAxiomSlack = 1e-12;
constexpr double kLowerFloor = 1e-12;  // a lower constant below this counts as zero
constexpr double kUpperCeil = 1e12;    // an upper constant above this counts as unbounded

}  // namespace detail

/// Falsification of items (1)-(3) of the filter definition on a grid. The
/// z-grid is augmented with z = lambda and z = lambda(1 + 1e-9) for every
/// lambda so boundary constants are attained. Violations are reported with
/// coordinates, never thrown.
inline FilterAxiomReport check_filter_axioms(const FilterKind& kind, AxiomGrid grid) {
  FilterAxiomReport report;
  report.family = kind.label();
  report.constants.fill(std::numeric_limits<double>::quiet_NaN());
  const double tau = kind.qualification();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  std::vector<double> zs = grid.zs;
  for (double l : grid.lambdas) {
    if (l <= grid.kappa_sq) zs.push_back(l);
    if (l * (1.0 + 1e-9) <= grid.kappa_sq) zs.push_back(l * (1.0 + 1e-9));
  }
  std::sort(zs.begin(), zs.end());
  zs.erase(std::unique(zs.begin(), zs.end()), zs.end());
  std::vector<double> lambdas = grid.lambdas;
  std::sort(lambdas.begin(), lambdas.end());

  auto violate = [&](bool& flag, std::string axiom, double lambda, double z, double value) {
    flag = false;
    report.violations.push_back({std::move(axiom), lambda, z, value});
  };

  double c1 = kInfinity, c2 = 0.0, c3 = kInfinity, c4 = 0.0, c5 = kInfinity, c6 = kInfinity, c7 = kInfinity,
         c8 = 0.0;
  const double tau_probe = std::min(tau, 8.0);
  const std::array<double, 5> tau_primes{0.0, tau_probe / 4, tau_probe / 2, 3 * tau_probe / 4, tau_probe};

  std::vector<double> previous_row;  // z phi at the previous (smaller) lambda
  for (double lambda : lambdas) {
    const FilterSpec f(kind, lambda);
    std::vector<double> row(zs.size());
    double prev = -kInfinity;
    for (std::size_t i = 0; i < zs.size(); ++i) {
      const double z = zs[i];
      const double phi = f.phi(z), psi = f.psi(z);
      const double zphi = z * phi;
      row[i] = zphi;

      // (1) range and monotonicity
      if (zphi < -detail::kAxiomSlack || zphi > 1.0 + detail::kAxiomSlack)
        violate(report.monotonicity_ok, "z*phi in [0,1]", lambda, z, zphi);
      if (zphi < prev - detail::kAxiomSlack) violate(report.monotonicity_ok, "z*phi non-decreasing in z", lambda, z, zphi);
      if (!previous_row.empty() && zphi > previous_row[i] + detail::kAxiomSlack)
        violate(report.monotonicity_ok, "z*phi non-increasing in lambda", lambda, z, zphi);
      prev = zphi;

      // (2) qualification bounds
      if (z > lambda) {
        c1 = std::min(c1, zphi);
        for (double tp : tau_primes) c2 = std::max(c2, psi * std::pow(z / lambda, tp));
        if (std::isfinite(tau)) c7 = std::min(c7, std::pow(z / lambda, 2 * tau) * psi * psi);
      } else {
        c3 = std::min(c3, lambda * phi);
        c4 = std::max(c4, lambda * phi);
        c5 = std::min(c5, psi);
        if (std::isfinite(tau) && z > 0.0) c8 = std::max(c8, std::pow(z / lambda, 2 * tau) * psi * psi / zphi);
      }
    }
    if (std::isfinite(tau)) c6 = std::min(c6, f.psi(grid.kappa_sq) / std::pow(lambda, tau));
    previous_row = std::move(row);
  }

  auto lower = [&](bool& flag, const char* name, double c) {
    if (!(c >= detail::kLowerFloor)) violate(flag, name, nan, nan, c);
  };
  auto upper = [&](bool& flag, const char* name, double c) {
    if (!(c <= detail::kUpperCeil)) violate(flag, name, nan, nan, c);
  };
  lower(report.qualification_ok, "C1: phi >= C1/z for z > lambda", c1);
  upper(report.qualification_ok, "C2: psi <= C2 (z/lambda)^-tau'", c2);
  lower(report.qualification_ok, "C3: lambda*phi >= C3 for z <= lambda", c3);
  upper(report.qualification_ok, "C4: lambda*phi <= C4 for z <= lambda", c4);
  lower(report.qualification_ok, "C5: psi >= C5 for z <= lambda", c5);
  report.constants[1] = c1;
  report.constants[2] = c2;
  report.constants[3] = c3;
  report.constants[4] = c4;
  report.constants[5] = c5;

  if (std::isfinite(tau)) {
    lower(report.finite_case_ok, "C6: psi(kappa^2) >= C6 lambda^tau", c6);
    lower(report.finite_case_ok, "C7: (z/lambda)^{2tau} psi^2 >= C7 for z > lambda", c7);
    upper(report.finite_case_ok, "C8: (z/lambda)^{2tau} psi^2 <= C8 z phi for z <= lambda", c8);
    report.constants[6] = c6;
    report.constants[7] = c7;
    report.constants[8] = c8;
  } else {
    report.finite_case_applicable = false;
    report.finite_case_note = "not applicable, tau=inf";
  }
  return report;
}

}  // namespace speclab
