#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cflow {

/// Scalar sparse matrix in compressed-row form. Operators acting blockwise on
/// m-component fields store one scalar matrix and apply it per component.
struct Csr {
  int rows = 0;
  std::vector<int> row_ptr;  // size rows+1
  std::vector<int> col;
  std::vector<double> val;
};

namespace kernels {

// Reductions use a fixed chunk length so the partial sums (and therefore the
// final result bits) do not depend on scheduling or thread count. The OpenMP
// variants are bit-identical to their serial counterparts.
inline constexpr std::size_t kChunk = 4096;

// Below this many scalar operations the parallel variants run serially;
// fork/join overhead dominates small kernels.
inline constexpr std::size_t kParallelGrain = 1u << 16;

double dot_serial(std::span<const double> x, std::span<const double> y);
double dot(std::span<const double> x, std::span<const double> y);

// y += a*x
void axpy_serial(double a, std::span<const double> x, std::span<double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);

void fill(std::span<double> x, double value);

// y = A x applied per component: dof index = vertex * m + c.
void csr_matvec_serial(const Csr& A, int m, std::span<const double> x, std::span<double> y);
void csr_matvec(const Csr& A, int m, std::span<const double> x, std::span<double> y);

}  // namespace kernels
}  // namespace cflow
