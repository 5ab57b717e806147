#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "cflow/kernels.hpp"

namespace cflow {

/// Uniform right-angled triangulation of the square (-1/2, 1/2)^2 with n
/// subdivisions per side: (n+1)^2 vertices, 2 n^2 triangles, every cell split
/// along the same diagonal.
struct Mesh {
  int n = 0;
  std::vector<std::array<double, 2>> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::uint8_t> boundary_vertex;  // 1 on the Dirichlet boundary

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  int triangle_count() const { return static_cast<int>(triangles.size()); }
  double signed_area(int t) const;
};

Mesh build_uniform_mesh(int n);

/// Plain-text vertex/triangle listing, one record per line.
void export_mesh(const Mesh& mesh, std::ostream& out);

/// Vector P1 space: m components per vertex, dof index = vertex*m + component.
/// Free dofs are every component at non-Dirichlet vertices.
struct FeSpace {
  Mesh mesh;
  int components = 3;

  int dof_count() const { return mesh.vertex_count() * components; }
  bool vertex_is_free(int v) const { return mesh.boundary_vertex[v] == 0; }
  int free_dof_count() const;
  /// Enumeration of free (vertex, component) pairs as flat dof indices.
  std::vector<int> free_dof_map() const;
};

FeSpace make_space(Mesh mesh, int components);

/// Symmetric bilinear form acting blockwise on m-component coefficient
/// vectors; stores one scalar CSR matrix over the vertex graph.
struct SymmetricSparseOperator {
  Csr csr;
  int components = 1;

  int dimension() const { return csr.rows * components; }
  void apply(std::span<const double> x, std::span<double> y) const {
    kernels::csr_matvec(csr, components, x, y);
  }
  /// u^T A v.
  double quad(std::span<const double> u, std::span<const double> v) const;
  std::vector<double> diagonal() const;  // per dof
};

enum class MetricKind { kL2, kH1 };

/// Stiffness of the form integral grad(u) : (grad(v) M) with M = diag(m_diag);
/// exact per-triangle formulas (P1 gradients are constant).
SymmetricSparseOperator assemble_anisotropic_stiffness(const FeSpace& space,
                                                       const std::array<double, 2>& m_diag);

/// kL2: consistent mass of integral u.v; kH1: integral (grad u : grad v + u.v).
SymmetricSparseOperator assemble_metric(const FeSpace& space, MetricKind kind);

/// result = a*A + b*B with boundary rows/columns cleared and a unit diagonal
/// placed on boundary dofs (A and B must share the assembly pattern).
SymmetricSparseOperator combine_masked(const SymmetricSparseOperator& A,
                                       const SymmetricSparseOperator& B, double a, double b,
                                       const std::vector<std::uint8_t>& boundary_vertex);

/// Coefficient vector of the vertex-wise sample of f; throws on non-finite
/// samples.
std::vector<double> nodal_interpolate(
    const FeSpace& space, const std::function<void(double, double, std::span<double>)>& f);

/// Row sums of the lumped scalar mass matrix (one weight per vertex; the
/// weights sum to the domain area).
std::vector<double> lumped_vertex_weights(const FeSpace& space);

/// sum_z w_z |values[z]| with the lumped vertex weights.
double l1_nodal_norm(const FeSpace& space, std::span<const double> vertex_values);

}  // namespace cflow
