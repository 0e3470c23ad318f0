#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "speclab/error.hpp"

namespace speclab {

enum class SpectrumOrigin { funk_hecke, idealized, custom };

inline std::string_view to_string(SpectrumOrigin origin) {
  switch (origin) {
    case SpectrumOrigin::funk_hecke: return "funk_hecke";
    case SpectrumOrigin::idealized: return "idealized";
    case SpectrumOrigin::custom: return "custom";
  }
  return "custom";
}

/// One distinct eigenvalue of the integral operator together with the
/// number of eigenfunctions sharing it (all harmonics of one degree).
struct SpectrumGroup {
  int degree = 0;
  double eigenvalue = 0.0;
  double multiplicity = 1.0;
};

/// Grouped spectrum truncated at some maximal degree. Groups are stored
/// instead of expanded eigenvalue lists because multiplicities grow like d^k.
struct SpectrumModel {
  std::vector<SpectrumGroup> groups;
  SpectrumOrigin origin = SpectrumOrigin::custom;
  int sphere_dim = 0;  // 0 when the spectrum is not tied to a sphere
  std::optional<double> tail_mass;

  int max_degree() const { return groups.empty() ? -1 : groups.back().degree; }

  double eigenvalue(int degree) const {
    require(degree >= 0 && degree < static_cast<int>(groups.size()), ErrorCode::precondition,
            "spectrum has no group for degree " + std::to_string(degree));
    return groups[static_cast<std::size_t>(degree)].eigenvalue;
  }

  /// Sum of mu_k * mult_k over the stored groups.
  double trace() const {
    double acc = 0.0;
    for (const auto& g : groups) acc += g.eigenvalue * g.multiplicity;
    return acc;
  }

  /// mu_k = d^{-k}, mult_k = d^k for k = 0..max_degree.
  static SpectrumModel idealized(double d, int max_degree) {
    require(d >= 1.0, ErrorCode::precondition, "idealized spectrum needs d >= 1");
    require(max_degree >= 0, ErrorCode::precondition, "idealized spectrum needs max_degree >= 0");
    SpectrumModel out;
    out.origin = SpectrumOrigin::idealized;
    for (int k = 0; k <= max_degree; ++k) out.groups.push_back({k, std::pow(d, -k), std::pow(d, k)});
    return out;
  }

  static SpectrumModel custom(std::vector<SpectrumGroup> groups) {
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const auto& g = groups[i];
      require(g.degree == static_cast<int>(i), ErrorCode::precondition, "spectrum groups must list degrees 0, 1, 2, ...");
      require(g.eigenvalue >= 0.0 && std::isfinite(g.eigenvalue), ErrorCode::precondition,
              "spectrum eigenvalues must be finite and non-negative");
      require(g.multiplicity >= 0.0, ErrorCode::precondition, "multiplicities must be non-negative");
    }
    SpectrumModel out;
    out.groups = std::move(groups);
    return out;
  }
};

}  // namespace speclab
