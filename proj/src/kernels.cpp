#include "cflow/kernels.hpp"

#include <cassert>
#include <stdexcept>

namespace cflow::kernels {

namespace {

inline double chunk_sum(std::span<const double> x, std::span<const double> y, std::size_t begin,
                        std::size_t end) {
  double s = 0.0;
  for (std::size_t i = begin; i < end; ++i) s += x[i] * y[i];
  return s;
}

inline void matvec_row(const Csr& A, int m, std::span<const double> x, std::span<double> y, int r) {
  for (int c = 0; c < m; ++c) y[static_cast<std::size_t>(r) * m + c] = 0.0;
  for (int p = A.row_ptr[r]; p < A.row_ptr[r + 1]; ++p) {
    const double a = A.val[p];
    const std::size_t base = static_cast<std::size_t>(A.col[p]) * m;
    for (int c = 0; c < m; ++c) y[static_cast<std::size_t>(r) * m + c] += a * x[base + c];
  }
}

}  // namespace

double dot_serial(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("dot: size mismatch");
  const std::size_t n = x.size();
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(n_chunks, 0.0);
  for (std::size_t k = 0; k < n_chunks; ++k)
    partial[k] = chunk_sum(x, y, k * kChunk, std::min(n, (k + 1) * kChunk));
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  if (n < kParallelGrain) return dot_serial(x, y);
  if (x.size() != y.size()) throw std::invalid_argument("dot: size mismatch");
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<double> partial(n_chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < static_cast<long long>(n_chunks); ++k) {
    const std::size_t begin = static_cast<std::size_t>(k) * kChunk;
    partial[k] = chunk_sum(x, y, begin, std::min(n, begin + kChunk));
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

void axpy_serial(double a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() < kParallelGrain) {
    axpy_serial(a, x, y);
    return;
  }
  assert(x.size() == y.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(x.size()); ++i) y[i] += a * x[i];
}

void fill(std::span<double> x, double value) {
#pragma omp parallel for schedule(static) if (x.size() >= kParallelGrain)
  for (long long i = 0; i < static_cast<long long>(x.size()); ++i) x[i] = value;
}

void csr_matvec_serial(const Csr& A, int m, std::span<const double> x, std::span<double> y) {
  assert(x.size() == static_cast<std::size_t>(A.rows) * m);
  assert(y.size() == x.size());
  for (int r = 0; r < A.rows; ++r) matvec_row(A, m, x, y, r);
}

void csr_matvec(const Csr& A, int m, std::span<const double> x, std::span<double> y) {
  if (x.size() < kParallelGrain) {
    csr_matvec_serial(A, m, x, y);
    return;
  }
  assert(x.size() == static_cast<std::size_t>(A.rows) * m);
  assert(y.size() == x.size());
#pragma omp parallel for schedule(static)
  for (int r = 0; r < A.rows; ++r) matvec_row(A, m, x, y, r);
}

}  // namespace cflow::kernels
