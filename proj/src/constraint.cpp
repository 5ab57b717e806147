#include "cflow/constraint.hpp"

#include <cmath>
#include <stdexcept>

namespace cflow {

std::vector<double> violation_field(const FeSpace& space, std::span<const double> u) {
  if (u.size() != static_cast<std::size_t>(space.dof_count()))
    throw std::invalid_argument("violation_field: coefficient vector size mismatch");
  const int m = space.components;
  const int nv = space.mesh.vertex_count();
  std::vector<double> b(nv);
#pragma omp parallel for schedule(static) if (nv >= static_cast<int>(kernels::kParallelGrain / 8))
  for (int v = 0; v < nv; ++v) {
    double norm_sq = 0.0;
    for (int c = 0; c < m; ++c) {
      const double x = u[static_cast<std::size_t>(v) * m + c];
      norm_sq += x * x;
    }
    b[v] = norm_sq - 1.0;
  }
  return b;
}

NodalConstraint build_constraint_rows(const FeSpace& space, std::span<const double> anchor) {
  if (anchor.size() != static_cast<std::size_t>(space.dof_count()))
    throw std::invalid_argument("build_constraint_rows: anchor size mismatch");
  const int m = space.components;
  NodalConstraint nc;
  for (int v = 0; v < space.mesh.vertex_count(); ++v) {
    if (!space.vertex_is_free(v)) continue;
    double norm_sq = 0.0;
    for (int c = 0; c < m; ++c) {
      const double x = anchor[static_cast<std::size_t>(v) * m + c];
      norm_sq += x * x;
    }
    if (std::sqrt(norm_sq) < kDegenerateAnchorNorm) {
      nc.degenerate_vertices.push_back(v);
      continue;
    }
    nc.active_vertices.push_back(v);
    SparseRow row;
    row.cols.resize(m);
    row.vals.resize(m);
    for (int c = 0; c < m; ++c) {
      row.cols[c] = v * m + c;
      row.vals[c] = anchor[static_cast<std::size_t>(v) * m + c];
    }
    nc.rows.push_back(std::move(row));
  }
  return nc;
}

double max_tangency_error(const FeSpace& space, const NodalConstraint& constraint,
                          std::span<const double> anchor, std::span<const double> v) {
  const int m = space.components;
  double worst = 0.0;
  for (int z : constraint.active_vertices) {
    double s = 0.0;
    for (int c = 0; c < m; ++c)
      s += anchor[static_cast<std::size_t>(z) * m + c] * v[static_cast<std::size_t>(z) * m + c];
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

}  // namespace cflow
