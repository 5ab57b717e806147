#include "cflow/kkt.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>

namespace cflow {

namespace {

// Applies x -> x - C^T (C C^T)^{-1} C x. The diagonal path covers rows with
// pairwise disjoint supports; the dense path handles small general systems.
class NullSpaceProjector {
 public:
  NullSpaceProjector(const std::vector<SparseRow>& rows, std::size_t dim) : rows_(rows) {
    std::vector<char> seen(dim, 0);
    bool disjoint = true;
    for (const auto& row : rows) {
      for (int c : row.cols) {
        if (seen[c]) disjoint = false;
        seen[c] = 1;
      }
    }
    diagonal_ = disjoint;
    if (disjoint) {
      inv_diag_.resize(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        double g = 0.0;
        for (double v : rows[i].vals) g += v * v;
        if (g <= 0.0) throw std::invalid_argument("solve_kkt: zero constraint row");
        inv_diag_[i] = 1.0 / g;
      }
    } else {
      const std::size_t nr = rows.size();
      if (nr > 4096)
        throw std::invalid_argument("solve_kkt: overlapping constraint rows beyond dense capacity");
      Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(nr, nr);
      // C C^T entries from shared columns.
      std::vector<std::vector<std::pair<int, double>>> by_col(dim);
      for (std::size_t i = 0; i < nr; ++i)
        for (std::size_t p = 0; p < rows[i].cols.size(); ++p)
          by_col[rows[i].cols[p]].emplace_back(static_cast<int>(i), rows[i].vals[p]);
      for (const auto& entries : by_col)
        for (const auto& [i, vi] : entries)
          for (const auto& [j, vj] : entries) gram(i, j) += vi * vj;
      dense_ = gram.ldlt();
      if (dense_->info() != Eigen::Success)
        throw std::runtime_error("solve_kkt: constraint Gram factorization failed (rank deficiency)");
    }
  }

  // y = C x
  void apply_rows(std::span<const double> x, std::vector<double>& y) const {
    y.assign(rows_.size(), 0.0);
#pragma omp parallel for schedule(static) if (rows_.size() >= kernels::kParallelGrain / 8)
    for (long long i = 0; i < static_cast<long long>(rows_.size()); ++i) {
      double s = 0.0;
      for (std::size_t p = 0; p < rows_[i].cols.size(); ++p)
        s += rows_[i].vals[p] * x[rows_[i].cols[p]];
      y[i] = s;
    }
  }

  // y = (C C^T)^{-1} x
  void solve_gram(std::vector<double>& y) const {
    if (y.empty()) return;
    if (diagonal_) {
      for (std::size_t i = 0; i < y.size(); ++i) y[i] *= inv_diag_[i];
    } else {
      Eigen::Map<Eigen::VectorXd> v(y.data(), static_cast<Eigen::Index>(y.size()));
      v = dense_->solve(v);
    }
  }

  void project(std::span<double> x) const {
    if (rows_.empty()) return;
    apply_rows(x, work_);
    solve_gram(work_);
    subtract_ct(work_, x);
  }

  // x -= C^T y
  void subtract_ct(const std::vector<double>& y, std::span<double> x) const {
    if (diagonal_) {
      // Disjoint supports: rows touch distinct dofs, safe to update in parallel.
#pragma omp parallel for schedule(static) if (rows_.size() >= kernels::kParallelGrain / 8)
      for (long long i = 0; i < static_cast<long long>(rows_.size()); ++i)
        for (std::size_t p = 0; p < rows_[i].cols.size(); ++p)
          x[rows_[i].cols[p]] -= y[i] * rows_[i].vals[p];
    } else {
      for (std::size_t i = 0; i < rows_.size(); ++i)
        for (std::size_t p = 0; p < rows_[i].cols.size(); ++p)
          x[rows_[i].cols[p]] -= y[i] * rows_[i].vals[p];
    }
  }

  std::vector<double> multipliers(std::span<const double> primal_residual) const {
    std::vector<double> y;
    apply_rows(primal_residual, y);
    solve_gram(y);
    return y;
  }

 private:
  const std::vector<SparseRow>& rows_;
  bool diagonal_ = true;
  std::vector<double> inv_diag_;
  std::optional<Eigen::LDLT<Eigen::MatrixXd>> dense_;
  mutable std::vector<double> work_;
};

}  // namespace

KktSolution solve_kkt(const KktSystem& system, double tol, std::span<const double> diag_precond,
                      std::span<const double> warm_start) {
  if (system.primal_block == nullptr) throw std::invalid_argument("solve_kkt: missing primal block");
  if (tol <= 0.0) throw std::invalid_argument("solve_kkt: tol must be positive");
  const SymmetricSparseOperator& A = *system.primal_block;
  const std::size_t n = system.rhs_primal.size();
  if (n != static_cast<std::size_t>(A.dimension()))
    throw std::invalid_argument("solve_kkt: rhs/primal dimension mismatch");

  NullSpaceProjector proj(system.constraint_rows, n);
  const bool precond = !diag_precond.empty();

  KktSolution sol;
  sol.primal.assign(n, 0.0);
  if (!warm_start.empty()) {
    if (warm_start.size() != n) throw std::invalid_argument("solve_kkt: warm start size mismatch");
    std::copy(warm_start.begin(), warm_start.end(), sol.primal.begin());
    proj.project(sol.primal);
  }

  std::vector<double> r(n), z(n), p(n), q(n);
  A.apply(sol.primal, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = system.rhs_primal[i] - r[i];
  proj.project(r);

  std::vector<double> b_proj(system.rhs_primal.begin(), system.rhs_primal.end());
  proj.project(b_proj);
  const double b_norm = std::sqrt(kernels::dot(b_proj, b_proj));
  if (b_norm == 0.0) {
    sol.primal.assign(n, 0.0);
    sol.multipliers = proj.multipliers(system.rhs_primal);
    sol.residual = 0.0;
    return sol;
  }

  auto apply_precond = [&](const std::vector<double>& in, std::vector<double>& out) {
    if (precond) {
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i] / diag_precond[i];
      proj.project(out);
    } else {
      out = in;
    }
  };

  apply_precond(r, z);
  p = z;
  double rz = kernels::dot(r, z);
  double r_norm = std::sqrt(kernels::dot(r, r));

  const long long cap = 10LL * static_cast<long long>(n) + 10;
  long long it = 0;
  while (r_norm > tol * b_norm) {
    if (++it > cap)
      throw std::runtime_error("solve_kkt: iteration cap exceeded (possible rank deficiency)");
    A.apply(p, q);
    proj.project(q);
    const double pq = kernels::dot(p, q);
    if (pq <= 0.0) throw std::runtime_error("solve_kkt: breakdown, operator not SPD on tangent space");
    const double alpha = rz / pq;
    kernels::axpy(alpha, p, sol.primal);
    kernels::axpy(-alpha, q, r);
    proj.project(r);  // kills roundoff drift out of ker(C)
    apply_precond(r, z);
    const double rz_next = kernels::dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
#pragma omp parallel for schedule(static) if (n >= kernels::kParallelGrain)
    for (long long i = 0; i < static_cast<long long>(n); ++i) p[i] = z[i] + beta * p[i];
    r_norm = std::sqrt(kernels::dot(r, r));
  }
  sol.iterations = static_cast<int>(it);

  // Multipliers from the unprojected primal residual f - A v.
  std::vector<double> full_res(n);
  A.apply(sol.primal, full_res);
  for (std::size_t i = 0; i < n; ++i) full_res[i] = system.rhs_primal[i] - full_res[i];
  sol.multipliers = proj.multipliers(full_res);
  proj.subtract_ct(sol.multipliers, full_res);
  sol.residual = std::sqrt(kernels::dot(full_res, full_res)) / b_norm;
  return sol;
}

}  // namespace cflow
