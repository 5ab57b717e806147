#pragma once

#include <complex>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "cflow/rational.hpp"

namespace cflow {

/// Coefficient families of the k-step backward differentiation formula:
///   delta      weights of the discrete time derivative (1/s) sum_j delta_j u^{n-j}
///   gamma      weights of the extrapolation sum_j gamma_j u^{n-j-1}
///   tilde_delta  partial sums of delta, the factor in delta(z) = (1-z) tilde_delta(z)
///   beta       weights of the quadratic difference identity, sparse over (j, l)
struct BdfScheme {
  int k = 0;
  std::vector<Rational> delta;        // delta_0 .. delta_k
  std::vector<Rational> tilde_delta;  // tilde_delta_0 .. tilde_delta_{k-1}
  std::vector<Rational> gamma;        // gamma_0 .. gamma_{k-1}
  std::map<std::pair<int, int>, Rational> beta;  // nonzero entries only
};

/// Taylor coefficients of 1/tilde_delta(z), generated by recurrence.
struct EtaSequence {
  int k = 0;
  std::vector<double> values;
};

inline constexpr int kMaxBdfOrder = 6;

/// delta / tilde_delta / gamma for 1 <= k <= 6, exact rationals. beta is left
/// empty; see beta_coefficients.
BdfScheme bdf_coefficients(int k);

/// Coefficients of the quadratic identity, computed from the coefficient-matching
/// linear system: rows indexed by unordered products a_{n-m} a_{n-p}, the k+1
/// redundant rows (m,m) removed, the remainder permuted to lower-triangular form
/// and solved by forward substitution in exact arithmetic. The result is
/// cross-checked against the full (rectangular) system before returning.
std::map<std::pair<int, int>, Rational> beta_coefficients(int k);

/// bdf_coefficients + beta_coefficients in one scheme.
BdfScheme bdf_scheme(int k);

/// Residual |LHS - RHS| of the quadratic identity
///   sum_j delta_j a_{n-j}^2 - 2 (sum_j delta_j a_{n-j}) (sum_j gamma_j a_{n-j-1})
///     = sum_{j,l} beta_{jl} s^{2j} (d_t^j a_{n-l})^2
/// evaluated on a window a[n-k..n]. Each s^{2j} (d_t^j a)^2 is evaluated as the
/// square of the binomial combination sum_q (-1)^q C(j,q) a_{n-l-q}; the powers
/// of s cancel exactly, so the residual is independent of s.
double verify_identity(const BdfScheme& scheme, std::span<const double> a, double s, int n);

/// eta by the recurrence eta_0 = 1/tilde_delta_0,
/// sum_{j=0}^{k-1} tilde_delta_j eta_{n-j} = 0 for n >= 1 (eta_{<0} = 0).
EtaSequence eta_coefficients(int k, int n_max);

/// The k-1 roots of tilde_delta(z) (companion-matrix eigenvalues), sorted by
/// (real, imag). All moduli exceed 1 for k <= 6.
std::vector<std::complex<double>> characteristic_roots(int k);

struct StabilityCondition {
  double value = 0.0;
  bool holds = false;
};

/// Left-hand side of the summability condition
///   k ( sum_{j=2}^{k-1} (tilde_delta_j + b tilde_delta_{j-1})^2
///       + b^2 tilde_delta_{k-1}^2 ) / delta_0^2 < 1,   b = -tilde_delta_1/delta_0,
/// evaluated in exact rationals; holds iff the value is below 1. Satisfied for
/// k = 3, 4 and violated from k = 5 on.
StabilityCondition stability_condition(int k);

}  // namespace cflow
