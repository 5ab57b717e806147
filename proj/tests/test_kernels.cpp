#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cflow/kernels.hpp"
#include "test_support.hpp"

using namespace cflow;

namespace {

Csr random_csr(std::mt19937& rng, int rows, int per_row) {
  std::uniform_int_distribution<int> col(0, rows - 1);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  Csr csr;
  csr.rows = rows;
  csr.row_ptr.push_back(0);
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < per_row; ++j) {
      csr.col.push_back(col(rng));
      csr.val.push_back(val(rng));
    }
    csr.row_ptr.push_back(static_cast<int>(csr.col.size()));
  }
  return csr;
}

}  // namespace

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
  auto rng = testing::make_rng();
  const std::size_t n = 3 * kernels::kChunk + 517;  // not a chunk multiple
  const auto x = testing::uniform_vector(rng, n);
  const auto y = testing::uniform_vector(rng, n);

  SUBCASE("dot") { CHECK(kernels::dot(x, y) == kernels::dot_serial(x, y)); }

  SUBCASE("axpy") {
    auto a = y, b = y;
    kernels::axpy_serial(0.37, x, a);
    kernels::axpy(0.37, x, b);
    CHECK(a == b);
  }

  SUBCASE("csr matvec, three components") {
    const int rows = 401;
    const Csr csr = random_csr(rng, rows, 7);
    const auto v = testing::uniform_vector(rng, static_cast<std::size_t>(rows) * 3);
    std::vector<double> out_serial(v.size()), out_par(v.size());
    kernels::csr_matvec_serial(csr, 3, v, out_serial);
    kernels::csr_matvec(csr, 3, v, out_par);
    CHECK(out_serial == out_par);
  }
}

TEST_CASE("chunked dot agrees with a plain accumulation") {
  auto rng = testing::make_rng(5);
  const auto x = testing::uniform_vector(rng, 20000);
  const auto y = testing::uniform_vector(rng, 20000);
  double plain = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) plain += x[i] * y[i];
  CHECK(kernels::dot(x, y) == doctest::Approx(plain).epsilon(1e-13));
}

TEST_CASE("dot rejects mismatched sizes") {
  std::vector<double> a(3), b(4);
  CHECK_THROWS_AS(kernels::dot(a, b), std::invalid_argument);
}
