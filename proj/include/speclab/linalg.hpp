#pragma once

// Thin wrappers over the dense symmetric routines the estimators need.
// With SPECLAB_USE_LAPACKE the eigendecomposition goes through dsyevd;
// otherwise Eigen's SelfAdjointEigenSolver is used. Both return eigenvalues
// in ascending order with orthonormal eigenvectors in the columns.

#include <Eigen/Dense>

#include <mutex>
#include <string>

#include "speclab/error.hpp"

#ifdef SPECLAB_USE_LAPACKE
#include <lapacke.h>
extern "C" void openblas_set_num_threads(int);
#endif

namespace speclab {

struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

inline SymmetricEigen symmetric_eigen(const Eigen::MatrixXd& a) {
  require(a.rows() == a.cols(), ErrorCode::dimension_mismatch, "symmetric_eigen: matrix is not square");
  SymmetricEigen out;
  const auto n = a.rows();
  if (n == 0) return out;
#ifdef SPECLAB_USE_LAPACKE
  // The harness parallelises over trials; BLAS threads would only fight it
  // and make round-off depend on the machine.
  static std::once_flag pin_threads;
  std::call_once(pin_threads, [] { openblas_set_num_threads(1); });
  out.vectors = a;
  out.values.resize(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', static_cast<lapack_int>(n),
                                         out.vectors.data(), static_cast<lapack_int>(n), out.values.data());
  require(info == 0, ErrorCode::solver, "dsyevd failed with info=" + std::to_string(info));
#else
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  require(solver.info() == Eigen::Success, ErrorCode::solver, "eigendecomposition did not converge");
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
#endif
  return out;
}

}  // namespace speclab
