#pragma once

#include <span>
#include <vector>

#include "cflow/fem.hpp"
#include "cflow/kkt.hpp"

namespace cflow {

inline constexpr double kDegenerateAnchorNorm = 1e-8;

/// Nodal realization of the tangent space at an anchor field: one row
/// anchor(z) . v(z) = 0 per active free vertex. Vertices whose anchor norm
/// falls below kDegenerateAnchorNorm are excluded so the rows keep full rank.
struct NodalConstraint {
  std::vector<int> active_vertices;
  std::vector<int> degenerate_vertices;
  std::vector<SparseRow> rows;  // aligned with active_vertices
};

/// Per-vertex violation |u(z)|^2 - 1 of the pointwise unit-sphere constraint.
std::vector<double> violation_field(const FeSpace& space, std::span<const double> u);

NodalConstraint build_constraint_rows(const FeSpace& space, std::span<const double> anchor);

/// max over active vertices of |anchor(z) . v(z)|.
double max_tangency_error(const FeSpace& space, const NodalConstraint& constraint,
                          std::span<const double> anchor, std::span<const double> v);

}  // namespace cflow
