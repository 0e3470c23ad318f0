// Fits KRR and gradient flow on one sample from S^d and compares the
// measured excess risk with the spectral prediction.
//
//   rate_demo [d] [gamma] [seed]

#include <cstdio>
#include <cstdlib>
#include <memory>

#include "speclab/speclab.hpp"

int main(int argc, char** argv) {
  using namespace speclab;
  const int d = argc > 1 ? std::atoi(argv[1]) : 8;
  const double gamma = argc > 2 ? std::atof(argv[2]) : 1.5;
  const std::uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 7;

  const SphereDim dim(d);
  const auto kernel = InnerProductKernel::ntk();
  const auto n = static_cast<Eigen::Index>(std::llround(std::pow(d, gamma)));
  const SpectrumModel spectrum = funk_hecke_spectrum(kernel, dim, static_cast<int>(gamma) + 8);

  const TargetFunction f = TargetFunction::kernel_sections(kernel, sample_uniform(dim, 3, seed));
  const PointCloud x = sample_uniform(dim, n, seed + 1);
  const PointCloud test = sample_uniform(dim, 1000, seed + 2);
  std::mt19937_64 engine(seed + 3);
  std::normal_distribution<double> noise(0.0, 1.0);
  Eigen::VectorXd y = f(x);
  for (Eigen::Index i = 0; i < n; ++i) y(i) += noise(engine);

  const auto basis = std::make_shared<const SpectralBasis>(kernel, x);
  const TargetCoefficients energies = target_energies(f, spectrum, 1.0);

  std::printf("d=%d n=%ld tail_mass=%.3g\n", d, static_cast<long>(n), spectrum.tail_mass.value_or(0.0));
  std::printf("%-16s %10s %12s %12s %12s\n", "algorithm", "lambda", "test_risk", "bias+var", "theory");
  for (const FilterKind kind : {FilterKind::krr(), FilterKind::gradient_flow()}) {
    const double ell = balanced_lambda_exponent(1.0, kind.qualification(), gamma).ell;
    const FilterSpec filter(kind, std::pow(d, -ell));
    const FittedEstimator est = fit_spectral(basis, filter, y);
    const RiskReport mc = excess_risk_mc(est, f, test);
    const RiskReport split = risk_decomposition(*basis, filter, f, 1.0, test);
    const double theory = theoretical_risk(spectrum, energies, filter, static_cast<double>(n), 1.0);
    std::printf("%-16s %10.4g %12.4g %12.4g %12.4g\n", kind.label().c_str(), filter.lambda(), mc.excess_risk,
                split.excess_risk, theory);
  }
  const RateResult r = spectral_rate_exponent(RateQuery(1.0, kInfinity, gamma));
  std::printf("predicted decay d^-%.3g (%s)\n", r.exponent, r.regime.c_str());
  return 0;
}
