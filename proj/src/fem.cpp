#include "cflow/fem.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

namespace cflow {

namespace {

// Assembles a scalar vertex-graph matrix from per-triangle 3x3 element
// contributions. Element kernels are exact; accumulation is serial so the
// result is independent of scheduling.
template <typename ElementKernel>
Csr assemble_scalar(const Mesh& mesh, ElementKernel&& element) {
  const int nv = mesh.vertex_count();
  std::vector<std::map<int, double>> rows(nv);
  std::array<std::array<double, 3>, 3> local{};
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    element(t, local);
    const auto& tri = mesh.triangles[t];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) rows[tri[i]][tri[j]] += local[i][j];
  }
  Csr csr;
  csr.rows = nv;
  csr.row_ptr.resize(nv + 1, 0);
  for (int v = 0; v < nv; ++v) csr.row_ptr[v + 1] = csr.row_ptr[v] + static_cast<int>(rows[v].size());
  csr.col.reserve(csr.row_ptr[nv]);
  csr.val.reserve(csr.row_ptr[nv]);
  for (int v = 0; v < nv; ++v)
    for (const auto& [c, a] : rows[v]) {
      csr.col.push_back(c);
      csr.val.push_back(a);
    }
  return csr;
}

}  // namespace

double Mesh::signed_area(int t) const {
  const auto& tri = triangles[t];
  const auto& p0 = vertices[tri[0]];
  const auto& p1 = vertices[tri[1]];
  const auto& p2 = vertices[tri[2]];
  return 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]));
}

Mesh build_uniform_mesh(int n) {
  if (n < 1) throw std::invalid_argument("build_uniform_mesh: n must be >= 1");
  Mesh mesh;
  mesh.n = n;
  const double h = 1.0 / n;
  mesh.vertices.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      mesh.vertices.push_back({-0.5 + i * h, -0.5 + j * h});
  auto vid = [n](int i, int j) { return j * (n + 1) + i; };
  mesh.triangles.reserve(2 * static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      // Every cell split along the diagonal from (i,j) to (i+1,j+1).
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
      mesh.triangles.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
    }
  mesh.boundary_vertex.assign(mesh.vertices.size(), 0);
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      if (i == 0 || i == n || j == 0 || j == n) mesh.boundary_vertex[vid(i, j)] = 1;
  return mesh;
}

void export_mesh(const Mesh& mesh, std::ostream& out) {
  out << "vertices " << mesh.vertex_count() << "\n";
  for (int v = 0; v < mesh.vertex_count(); ++v)
    out << v << " " << mesh.vertices[v][0] << " " << mesh.vertices[v][1] << " "
        << int(mesh.boundary_vertex[v]) << "\n";
  out << "triangles " << mesh.triangle_count() << "\n";
  for (int t = 0; t < mesh.triangle_count(); ++t)
    out << t << " " << mesh.triangles[t][0] << " " << mesh.triangles[t][1] << " "
        << mesh.triangles[t][2] << "\n";
}

int FeSpace::free_dof_count() const {
  int free_vertices = 0;
  for (int v = 0; v < mesh.vertex_count(); ++v)
    if (vertex_is_free(v)) ++free_vertices;
  return free_vertices * components;
}

std::vector<int> FeSpace::free_dof_map() const {
  std::vector<int> map;
  map.reserve(free_dof_count());
  for (int v = 0; v < mesh.vertex_count(); ++v)
    if (vertex_is_free(v))
      for (int c = 0; c < components; ++c) map.push_back(v * components + c);
  return map;
}

FeSpace make_space(Mesh mesh, int components) {
  if (components < 1) throw std::invalid_argument("make_space: components must be >= 1");
  return FeSpace{std::move(mesh), components};
}

double SymmetricSparseOperator::quad(std::span<const double> u, std::span<const double> v) const {
  std::vector<double> tmp(v.size());
  apply(v, tmp);
  return kernels::dot(u, tmp);
}

std::vector<double> SymmetricSparseOperator::diagonal() const {
  std::vector<double> d(dimension(), 0.0);
  for (int r = 0; r < csr.rows; ++r)
    for (int p = csr.row_ptr[r]; p < csr.row_ptr[r + 1]; ++p)
      if (csr.col[p] == r)
        for (int c = 0; c < components; ++c) d[static_cast<std::size_t>(r) * components + c] = csr.val[p];
  return d;
}

SymmetricSparseOperator assemble_anisotropic_stiffness(const FeSpace& space,
                                                       const std::array<double, 2>& m_diag) {
  if (m_diag[0] <= 0.0 || m_diag[1] <= 0.0)
    throw std::invalid_argument("assemble_anisotropic_stiffness: M must be positive definite");
  const Mesh& mesh = space.mesh;
  auto element = [&](int t, std::array<std::array<double, 3>, 3>& local) {
    const auto& tri = mesh.triangles[t];
    const auto& p0 = mesh.vertices[tri[0]];
    const auto& p1 = mesh.vertices[tri[1]];
    const auto& p2 = mesh.vertices[tri[2]];
    const double area = mesh.signed_area(t);
    // Constant P1 gradients: grad(lambda_i) = perp(opposite edge) / (2 area).
    const double gx[3] = {(p1[1] - p2[1]) / (2 * area), (p2[1] - p0[1]) / (2 * area),
                          (p0[1] - p1[1]) / (2 * area)};
    const double gy[3] = {(p2[0] - p1[0]) / (2 * area), (p0[0] - p2[0]) / (2 * area),
                          (p1[0] - p0[0]) / (2 * area)};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        local[i][j] = area * (m_diag[0] * gx[i] * gx[j] + m_diag[1] * gy[i] * gy[j]);
  };
  return {assemble_scalar(mesh, element), space.components};
}

SymmetricSparseOperator assemble_metric(const FeSpace& space, MetricKind kind) {
  const Mesh& mesh = space.mesh;
  const bool with_gradient = (kind == MetricKind::kH1);
  auto element = [&](int t, std::array<std::array<double, 3>, 3>& local) {
    const auto& tri = mesh.triangles[t];
    const auto& p0 = mesh.vertices[tri[0]];
    const auto& p1 = mesh.vertices[tri[1]];
    const auto& p2 = mesh.vertices[tri[2]];
    const double area = mesh.signed_area(t);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) local[i][j] = area / 12.0 * (i == j ? 2.0 : 1.0);
    if (with_gradient) {
      const double gx[3] = {(p1[1] - p2[1]) / (2 * area), (p2[1] - p0[1]) / (2 * area),
                            (p0[1] - p1[1]) / (2 * area)};
      const double gy[3] = {(p2[0] - p1[0]) / (2 * area), (p0[0] - p2[0]) / (2 * area),
                            (p1[0] - p0[0]) / (2 * area)};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) local[i][j] += area * (gx[i] * gx[j] + gy[i] * gy[j]);
    }
  };
  return {assemble_scalar(mesh, element), space.components};
}

SymmetricSparseOperator combine_masked(const SymmetricSparseOperator& A,
                                       const SymmetricSparseOperator& B, double a, double b,
                                       const std::vector<std::uint8_t>& boundary_vertex) {
  if (A.csr.rows != B.csr.rows || A.csr.col != B.csr.col || A.csr.row_ptr != B.csr.row_ptr)
    throw std::invalid_argument("combine_masked: operators must share the sparsity pattern");
  SymmetricSparseOperator out;
  out.components = A.components;
  out.csr.rows = A.csr.rows;
  out.csr.row_ptr = A.csr.row_ptr;
  out.csr.col = A.csr.col;
  out.csr.val.resize(A.csr.val.size());
  for (std::size_t p = 0; p < out.csr.val.size(); ++p)
    out.csr.val[p] = a * A.csr.val[p] + b * B.csr.val[p];
  for (int r = 0; r < out.csr.rows; ++r) {
    const bool r_bnd = boundary_vertex[r] != 0;
    for (int p = out.csr.row_ptr[r]; p < out.csr.row_ptr[r + 1]; ++p) {
      const bool c_bnd = boundary_vertex[out.csr.col[p]] != 0;
      if (r_bnd || c_bnd) out.csr.val[p] = (out.csr.col[p] == r) ? 1.0 : 0.0;
    }
  }
  return out;
}

std::vector<double> nodal_interpolate(
    const FeSpace& space, const std::function<void(double, double, std::span<double>)>& f) {
  const int m = space.components;
  std::vector<double> coeffs(space.dof_count());
  std::vector<double> sample(m);
  for (int v = 0; v < space.mesh.vertex_count(); ++v) {
    f(space.mesh.vertices[v][0], space.mesh.vertices[v][1], sample);
    for (int c = 0; c < m; ++c) {
      if (!std::isfinite(sample[c]))
        throw std::domain_error("nodal_interpolate: non-finite sample at vertex " + std::to_string(v));
      coeffs[static_cast<std::size_t>(v) * m + c] = sample[c];
    }
  }
  return coeffs;
}

std::vector<double> lumped_vertex_weights(const FeSpace& space) {
  const Mesh& mesh = space.mesh;
  std::vector<double> w(mesh.vertex_count(), 0.0);
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double third = mesh.signed_area(t) / 3.0;
    for (int i = 0; i < 3; ++i) w[mesh.triangles[t][i]] += third;
  }
  return w;
}

double l1_nodal_norm(const FeSpace& space, std::span<const double> vertex_values) {
  if (vertex_values.size() != static_cast<std::size_t>(space.mesh.vertex_count()))
    throw std::invalid_argument("l1_nodal_norm: expected one value per vertex");
  const std::vector<double> w = lumped_vertex_weights(space);
  std::vector<double> abs_values(vertex_values.size());
  for (std::size_t i = 0; i < abs_values.size(); ++i) abs_values[i] = std::abs(vertex_values[i]);
  return kernels::dot(w, abs_values);
}

}  // namespace cflow
