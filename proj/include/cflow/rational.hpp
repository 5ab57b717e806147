#pragma once

#include <boost/multiprecision/cpp_int.hpp>

namespace cflow {

// Exact rational arithmetic over arbitrary-precision integers. Coefficient
// tables are generated in this type; conversion to double happens only at
// the flow/FEM boundary.
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline BigInt binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  BigInt num = 1, den = 1;
  for (int i = 0; i < k; ++i) {
    num *= n - i;
    den *= i + 1;
  }
  return num / den;
}

}  // namespace cflow
