#include "penflow/linsolve.hpp"

#include <Eigen/SparseLU>
#ifdef PENFLOW_HAVE_UMFPACK
#include <Eigen/UmfPackSupport>
#endif

#include "penflow/errors.hpp"

namespace penflow {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

struct DirectSolver::Impl {
#ifdef PENFLOW_HAVE_UMFPACK
  Eigen::UmfPackLU<ColMatrix> lu;
#else
  Eigen::SparseLU<ColMatrix, Eigen::COLAMDOrdering<int>> lu;
#endif
  ColMatrix matrix;
};

DirectSolver::DirectSolver() : impl_(std::make_unique<Impl>()) {}
DirectSolver::~DirectSolver() = default;
DirectSolver::DirectSolver(DirectSolver&&) noexcept = default;
DirectSolver& DirectSolver::operator=(DirectSolver&&) noexcept = default;

const char* DirectSolver::backend() {
#ifdef PENFLOW_HAVE_UMFPACK
  return "umfpack";
#else
  return "eigen-sparselu";
#endif
}

void DirectSolver::factorize(const SparseMatrix& matrix) {
  if (matrix.rows() != matrix.cols()) throw SolverError("direct solve: matrix is not square");
  impl_->matrix = matrix;
  impl_->matrix.makeCompressed();
  impl_->lu.compute(impl_->matrix);
  if (impl_->lu.info() != Eigen::Success)
    throw SolverError("direct solve: factorization failed (singular or ill-conditioned matrix)");
}

Vector DirectSolver::solve(const Vector& rhs) const {
  Vector x = impl_->lu.solve(rhs);
  if (impl_->lu.info() != Eigen::Success || !x.allFinite())
    throw SolverError("direct solve: back substitution failed (zero pivot)");
  return x;
}

Vector solve_direct(const SparseMatrix& matrix, const Vector& rhs) {
  DirectSolver s;
  s.factorize(matrix);
  return s.solve(rhs);
}

}  // namespace penflow
