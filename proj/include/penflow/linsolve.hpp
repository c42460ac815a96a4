#pragma once

#include <memory>

#include "penflow/fem.hpp"

namespace penflow {

/// Sparse direct LU (UMFPACK when built with it, Eigen's SparseLU otherwise).
class DirectSolver {
 public:
  DirectSolver();
  ~DirectSolver();
  DirectSolver(DirectSolver&&) noexcept;
  DirectSolver& operator=(DirectSolver&&) noexcept;

  /// Throws SolverError when the matrix is numerically singular.
  void factorize(const SparseMatrix& matrix);
  Vector solve(const Vector& rhs) const;

  static const char* backend();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Vector solve_direct(const SparseMatrix& matrix, const Vector& rhs);

}  // namespace penflow
