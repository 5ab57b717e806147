#pragma once

#include <span>
#include <vector>

#include "cflow/fem.hpp"

namespace cflow {

/// One equality-constraint row over primal dofs.
struct SparseRow {
  std::vector<int> cols;
  std::vector<double> vals;
};

/// Symmetric saddle-point system
///   [ A  C^T ] [v]   [f]
///   [ C   0  ] [y] = [0]
/// with A symmetric positive definite on the primal space (Dirichlet dofs
/// already eliminated via masking) and C the constraint rows.
struct KktSystem {
  const SymmetricSparseOperator* primal_block = nullptr;
  std::vector<SparseRow> constraint_rows;
  std::vector<double> rhs_primal;  // rhs of the constraint equations is zero
};

struct KktSolution {
  std::vector<double> primal;
  std::vector<double> multipliers;  // one per constraint row
  int iterations = 0;
  double residual = 0.0;  // relative KKT residual at exit
};

/// Projected conjugate gradients on ker(C): iterates are kept in the
/// constraint null space by the exact projection I - C^T (C C^T)^{-1} C, and
/// multipliers are recovered from the final primal residual. The Gram matrix
/// C C^T is diagonal whenever the rows have pairwise disjoint supports (the
/// nodal-constraint case); otherwise a dense factorization is used.
///
/// Throws on breakdown or when the iteration cap 10 * dimension is exceeded.
/// `diag_precond` optionally supplies the Jacobi preconditioner (diagonal of
/// A); `warm_start` optionally seeds the primal iterate.
KktSolution solve_kkt(const KktSystem& system, double tol,
                      std::span<const double> diag_precond = {},
                      std::span<const double> warm_start = {});

}  // namespace cflow
