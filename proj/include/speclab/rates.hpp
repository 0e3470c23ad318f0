#pragma once

// Closed-form rate exponents under n ~ d^gamma: phase index, spectral and
// minimax exponents, balanced regularization exponents, plateaus and curves.
// An exponent r means risk ~ d^{-r} up to poly(ln d).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "speclab/error.hpp"
#include "speclab/filters.hpp"

namespace speclab {

struct RateQuery {
  double s = 1.0;
  double tau = kInfinity;
  double gamma = 1.0;

  RateQuery() = default;
  RateQuery(double s_, double tau_, double gamma_) : s(s_), tau(tau_), gamma(gamma_) { validate(); }

  void validate() const {
    require(s > 0.0 && std::isfinite(s), ErrorCode::domain, "s must be positive and finite");
    require(gamma >= 0.0 && std::isfinite(gamma), ErrorCode::domain, "gamma must be finite and >= 0");
    require(tau >= 1.0, ErrorCode::domain, "tau must be >= 1 (inf allowed)");
  }
};

struct RateResult {
  int p = 0;
  double exponent = 0.0;
  std::optional<double> s_tilde;
  std::string regime;  // "first branch", "middle branch" or "last branch"
  std::string log_factor_note;
  std::vector<std::string> warnings;
};

/// Largest p >= 0 with p(s+1) <= gamma; the boundary belongs to the right interval.
inline int phase_index(double s, double gamma) {
  require(s > 0.0, ErrorCode::domain, "s must be positive");
  require(gamma >= 0.0, ErrorCode::domain, "gamma must be >= 0");
  const double w = s + 1.0;
  auto p = static_cast<long long>(std::floor(gamma / w));
  while (static_cast<double>(p + 1) * w <= gamma) ++p;
  while (p > 0 && static_cast<double>(p) * w > gamma) --p;
  require(p <= std::numeric_limits<int>::max(), ErrorCode::overflow, "phase index overflows int");
  return static_cast<int>(p);
}

namespace detail {

inline std::string log_note(int p, double tau) {
  if (p == 0 && std::isinf(tau)) return "(ln d)^2 when p=0";
  return "poly(ln d)";
}

/// Minimum over the branches; ties resolve to the earliest branch.
inline RateResult pick_branch(int p, const std::vector<double>& branches) {
  static const char* const two[] = {"first branch", "last branch"};
  static const char* const three[] = {"first branch", "middle branch", "last branch"};
  std::size_t best = 0;
  for (std::size_t i = 1; i < branches.size(); ++i)
    if (branches[i] < branches[best]) best = i;
  RateResult r;
  r.p = p;
  r.exponent = std::max(0.0, branches[best]);
  r.regime = branches.size() == 2 ? two[best] : three[best];
  return r;
}

}  // namespace detail

/// Minimax exponent min{gamma - p, s(p+1)}.
inline RateResult minimax_exponent(double s, double gamma) {
  const int p = phase_index(s, gamma);
  RateResult r = detail::pick_branch(p, {gamma - p, s * (p + 1)});
  r.log_factor_note = "poly(ln d)";
  return r;
}

/// Exponent of an optimally tuned spectral algorithm with qualification tau.
inline RateResult spectral_rate_exponent(const RateQuery& q) {
  q.validate();
  const double s = q.s, tau = q.tau, g = q.gamma;
  const int p = phase_index(s, g);
  RateResult r;
  if (s <= tau) {
    r = detail::pick_branch(p, {g - p, s * (p + 1)});
    if (std::isfinite(tau)) {
      const bool ii = s > 1.0 / (2.0 * tau);
      const bool iii = g > (2.0 * tau + 1.0) * s / (2.0 * tau * (1.0 + s));
      if (!ii && !iii)
        r.warnings.push_back("side conditions fail: s <= 1/(2 tau) and gamma <= (2tau+1)s/(2tau(1+s)); "
                             "rate shown is outside its hypotheses");
    }
  } else {
    const double st = std::min(s, 2.0 * tau);
    r = detail::pick_branch(p, {g - p, (tau * (g - p + 1.0) + p * st) / (tau + 1.0), st * (p + 1)});
    r.s_tilde = st;
  }
  r.log_factor_note = detail::log_note(p, tau);
  return r;
}

/// Kernel ridge regression exponent; for s < 1 this is the tau = 1 spectral exponent.
inline RateResult krr_rate_exponent(double s, double gamma) {
  if (s < 1.0) return spectral_rate_exponent(RateQuery(s, 1.0, gamma));
  require(gamma >= 0.0, ErrorCode::domain, "gamma must be >= 0");
  const int p = phase_index(s, gamma);
  const double st = std::min(s, 2.0);
  RateResult r = detail::pick_branch(p, {gamma - p, (gamma - p + p * st + 1.0) / 2.0, st * (p + 1)});
  r.s_tilde = st;
  r.log_factor_note = "poly(ln d)";
  return r;
}

/// minimax - spectral, >= 0.
inline double saturation_gap(double s, double tau, double gamma) {
  const double gap = minimax_exponent(s, gamma).exponent - spectral_rate_exponent(RateQuery(s, tau, gamma)).exponent;
  return std::max(0.0, gap);
}

// ---------------------------------------------------------------------------

struct MinimaxLowerValue {
  bool explicit_value = false;  // false: only the exponent is known, up to constants
  double value = 0.0;           // lower bound when explicit_value
  double exponent = 0.0;        // r in d^{-r}
  std::string note;
};

/// Explicit minimax lower bound for gamma in (p(s+1), p+ps+s]; elsewhere only
/// the exponent s(p+1) is returned.
inline MinimaxLowerValue minimax_lower_value(double s, double gamma, double d) {
  require(d >= 3.0, ErrorCode::domain, "minimax_lower_value needs d >= 3");
  require(s > 0.0 && gamma >= 0.0, ErrorCode::domain, "need s > 0 and gamma >= 0");
  const int p = phase_index(s, gamma);
  const double lo = p * (s + 1.0);
  const double hi = p + p * s + s;
  MinimaxLowerValue out;
  if (gamma > lo && gamma <= hi) {
    const double ld = std::log(d);
    out.explicit_value = true;
    out.exponent = gamma - p;
    out.value = std::log(ld) / (50.0 * (gamma - lo) * ld * ld) * std::pow(d, p - gamma);
    out.note = "explicit";
  } else {
    out.exponent = s * (p + 1);
    out.note = "up to constants";
  }
  return out;
}

// ---------------------------------------------------------------------------

struct BalancedLambda {
  double ell = 0.0;  // lambda* ~ d^{-ell}
  std::string regime;
};

/// Exponent of the bias/variance balancing regularization lambda* ~ d^{-ell}.
inline BalancedLambda balanced_lambda_exponent(double s, double tau, double gamma) {
  RateQuery(s, tau, gamma).validate();
  std::string prefix;
  if (std::isfinite(tau) && s > 2.0 * tau) {
    s = 2.0 * tau;
    prefix = "s replaced by 2tau; ";
  }
  const double g = gamma;
  const int p = phase_index(s, g);
  const double edge = p * s + p + s;
  auto out = [&](double ell, const std::string& label) { return BalancedLambda{ell, prefix + label}; };

  if (s < 1.0) {
    if (std::isinf(tau)) {
      if (p >= 1 && g < edge) return out(p + s / 2.0, "s<1, tau=inf, p>=1, gamma<ps+p+s");
      if (p >= 1) return out((g + p * (1.0 - s)) / 2.0, "s<1, tau=inf, p>=1, gamma>=ps+p+s");
      if (g < s) return out(std::min({g, 1.0, 2.0 * g * s}) / 2.0, "s<1, tau=inf, p=0, gamma<s");
      return out(std::min({(g + 1.0 - s) / 2.0, g * (1.0 + s) - s, g / 2.0}), "s<1, tau=inf, p=0, gamma>=s");
    }
    if (g < edge) return out((g + 2.0 * tau * p - s * p - p) / (2.0 * tau), "s<1, tau finite, gamma<ps+p+s");
    return out(p + s / (2.0 * tau), "s<1, tau finite, gamma>=ps+p+s");
  }
  if (s <= tau) {
    if (p >= 1 && g < edge) return out(p + 0.5, "1<=s<=tau, p>=1, gamma<ps+p+s");
    if (p >= 1) return out((g - (p + 1) * (s - 1.0)) / 2.0, "1<=s<=tau, p>=1, gamma>=ps+p+s");
    if (g < s) return out(std::min(g, 1.0) / 2.0, "1<=s<=tau, p=0, gamma<s");
    return out((g - (s - 1.0)) / 2.0, "1<=s<=tau, p=0, gamma>=s");
  }
  const double delta = g - p * (s + 1.0);
  if (g < 1.0) return out(g / 2.0, "tau<s<=2tau, gamma<1");
  if (delta <= tau) return out(p + delta / (2.0 * tau), "tau<s<=2tau, delta<=tau");
  if (delta <= s + s / tau - 1.0) return out(p + (delta + 1.0) / (2.0 * tau + 2.0), "tau<s<=2tau, tau<delta<=s+s/tau-1");
  return out(p + (delta + 1.0 - s) / 2.0, "tau<s<=2tau, delta>s+s/tau-1");
}

// ---------------------------------------------------------------------------

struct PlateauInterval {
  int p = 0;
  double lo = 0.0;
  double hi = 0.0;
  double exponent = 0.0;  // constant rate on [lo, hi)
};

struct PlateauList {
  std::vector<PlateauInterval> intervals;
  std::string note;
};

/// Gamma intervals [p(s+1) + s + max{s,tau}/tau - 1, (p+1)(s+1)) on which the
/// spectral exponent is flat. Empty intervals are skipped.
inline PlateauList plateau_intervals(double s, double tau, int p_max) {
  require(s > 0.0 && tau >= 1.0, ErrorCode::domain, "need s > 0 and tau >= 1");
  require(p_max >= 0, ErrorCode::domain, "p_max must be >= 0");
  PlateauList out;
  if (std::isfinite(tau) && s > 2.0 * tau) {
    out.note = "empty: s > 2tau";
    return out;
  }
  const double shift = std::isinf(tau) ? 0.0 : std::max(s, tau) / tau - 1.0;
  const double st = std::isinf(tau) ? s : std::min(s, 2.0 * tau);
  for (int p = 0; p <= p_max; ++p) {
    const double lo = p * (s + 1.0) + s + shift;
    const double hi = (p + 1) * (s + 1.0);
    if (lo < hi) out.intervals.push_back({p, lo, hi, st * (p + 1)});
  }
  return out;
}

// ---------------------------------------------------------------------------

struct RateCurveRow {
  double gamma = 0.0;
  int p = 0;
  double r_spectral = 0.0;
  double r_minimax = 0.0;
  double r_krr = 0.0;
  std::string regime;
  bool plateau = false;
};

inline bool on_plateau(double s, double tau, double gamma) {
  const int p = phase_index(s, gamma);
  for (const auto& iv : plateau_intervals(s, tau, p).intervals)
    if (iv.p == p && gamma >= iv.lo && gamma < iv.hi) return true;
  return false;
}

inline std::vector<RateCurveRow> rate_curve(double s, double tau, const std::vector<double>& gamma_grid) {
  require(std::is_sorted(gamma_grid.begin(), gamma_grid.end()), ErrorCode::precondition,
          "gamma grid must be sorted ascending");
  std::vector<RateCurveRow> rows;
  rows.reserve(gamma_grid.size());
  for (double g : gamma_grid) {
    const RateResult spec = spectral_rate_exponent(RateQuery(s, tau, g));
    rows.push_back({g, spec.p, spec.exponent, minimax_exponent(s, g).exponent, krr_rate_exponent(s, g).exponent,
                    spec.regime, on_plateau(s, tau, g)});
  }
  return rows;
}

inline std::vector<double> linear_grid(double lo, double hi, int steps) {
  require(steps >= 1, ErrorCode::precondition, "steps must be >= 1");
  require(lo <= hi, ErrorCode::precondition, "gmin must not exceed gmax");
  std::vector<double> out(static_cast<std::size_t>(steps));
  if (steps == 1) {
    out[0] = lo;
    return out;
  }
  for (int i = 0; i < steps; ++i) out[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (steps - 1);
  out.back() = hi;
  return out;
}

}  // namespace speclab
