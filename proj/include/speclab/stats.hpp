#pragma once

// Small statistics helpers: log-log least squares.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "speclab/error.hpp"

namespace speclab {

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  std::size_t used = 0;
  std::vector<std::string> warnings;
};

/// Ordinary least squares of ln(risk) on ln(scale). Points with non-positive
/// risk are dropped with a warning; at least 3 usable points are required.
inline LogLogFit fit_rate_loglog(const std::vector<std::pair<double, double>>& points) {
  require(points.size() >= 3, ErrorCode::precondition, "fit_rate_loglog needs at least 3 points");
  LogLogFit fit;
  std::vector<double> xs, ys;
  for (const auto& [scale, risk] : points) {
    require(scale > 0.0 && std::isfinite(scale), ErrorCode::precondition, "scales must be positive");
    if (!(risk > 0.0) || !std::isfinite(risk)) {
      fit.warnings.push_back("dropped point at scale " + std::to_string(scale) + " with risk " + std::to_string(risk));
      continue;
    }
    xs.push_back(std::log(scale));
    ys.push_back(std::log(risk));
  }
  const std::size_t m = xs.size();
  require(m >= 3, ErrorCode::precondition, "fewer than 3 positive risks left to fit");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  require(sxx > 0.0, ErrorCode::precondition, "all scales are equal");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double r = ys[i] - fit.intercept - fit.slope * xs[i];
    sse += r * r;
  }
  fit.stderr_slope = std::sqrt(sse / static_cast<double>(m - 2) / sxx);
  fit.used = m;
  return fit;
}

}  // namespace speclab
