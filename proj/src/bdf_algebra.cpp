#include "cflow/bdf_algebra.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cflow {

namespace {

void check_order(int k, int lo) {
  if (k < lo || k > kMaxBdfOrder)
    throw std::invalid_argument("BDF order out of range: k=" + std::to_string(k));
}

// Index of the unordered product a_{n-m} a_{n-p}, m <= p <= k.
int pair_index(int m, int p, int k) { return m * (k + 1) - m * (m - 1) / 2 + (p - m); }

}  // namespace

BdfScheme bdf_coefficients(int k) {
  check_order(k, 1);
  BdfScheme s;
  s.k = k;
  s.delta.resize(k + 1);
  for (int r = 1; r <= k; ++r) s.delta[0] += Rational(1, r);
  for (int i = 1; i <= k; ++i) {
    Rational v(binomial(k, i), i);
    s.delta[i] = (i % 2 == 0) ? v : -v;
  }
  s.gamma.resize(k);
  for (int j = 0; j < k; ++j) {
    Rational v(binomial(k, j + 1));
    s.gamma[j] = (j % 2 == 0) ? v : -v;
  }
  s.tilde_delta.resize(k);
  s.tilde_delta[0] = s.delta[0];
  for (int j = 1; j < k; ++j) s.tilde_delta[j] = s.tilde_delta[j - 1] + s.delta[j];
  return s;
}

std::map<std::pair<int, int>, Rational> beta_coefficients(int k) {
  check_order(k, 1);
  const BdfScheme s = bdf_coefficients(k);

  const int n_rows = (k + 1) * (k + 2) / 2;  // unordered pairs (m,p), 0<=m<=p<=k
  const int n_unknowns = k * (k + 1) / 2;    // (j,l), 1<=j<=k, 0<=l<=k-j

  // Column index of beta_{jl}.
  std::map<std::pair<int, int>, int> col_of;
  {
    int c = 0;
    for (int j = 1; j <= k; ++j)
      for (int l = 0; l <= k - j; ++l) col_of[{j, l}] = c++;
  }

  // r: coefficients of a_{n-m} a_{n-p} on the left-hand side.
  std::vector<Rational> r(n_rows);
  for (int m = 0; m <= k; ++m) r[pair_index(m, m, k)] += s.delta[m];
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j < k; ++j) {
      const int a = std::min(i, j + 1), b = std::max(i, j + 1);
      r[pair_index(a, b, k)] -= 2 * s.delta[i] * s.gamma[j];
    }

  // A: the same coefficients produced by the right-hand side,
  // s^{2j} (d_t^j a_{n-l})^2 = (sum_q (-1)^q C(j,q) a_{n-l-q})^2.
  std::vector<std::vector<Rational>> A(n_rows, std::vector<Rational>(n_unknowns));
  for (const auto& [jl, c] : col_of) {
    const auto [j, l] = jl;
    for (int q1 = 0; q1 <= j; ++q1)
      for (int q2 = 0; q2 <= j; ++q2) {
        Rational w(binomial(j, q1) * binomial(j, q2));
        if ((q1 + q2) % 2 == 1) w = -w;
        const int a = std::min(l + q1, l + q2), b = std::max(l + q1, l + q2);
        A[pair_index(a, b, k)][c] += w;
      }
  }

  // Drop the k+1 redundant rows (m,m); order the rest by decreasing p-m, then
  // increasing m. Together with the matching column order this makes the
  // square matrix lower triangular.
  std::vector<std::pair<int, int>> row_order;
  for (int d = k; d >= 1; --d)
    for (int m = 0; m + d <= k; ++m) row_order.emplace_back(m, m + d);
  std::vector<std::pair<int, int>> col_order;
  for (const auto& [m, p] : row_order) col_order.emplace_back(p - m, m);

  std::vector<Rational> x(n_unknowns);
  for (int i = 0; i < n_unknowns; ++i) {
    const auto& row = A[pair_index(row_order[i].first, row_order[i].second, k)];
    for (int c = i + 1; c < n_unknowns; ++c)
      if (row[col_of[col_order[c]]] != 0)
        throw std::logic_error("beta system is not lower triangular under the prescribed order");
    Rational acc = r[pair_index(row_order[i].first, row_order[i].second, k)];
    for (int c = 0; c < i; ++c) acc -= row[col_of[col_order[c]]] * x[c];
    const Rational diag = row[col_of[col_order[i]]];
    if (diag == 0) throw std::logic_error("beta system is singular under the prescribed order");
    x[i] = acc / diag;
  }

  // The removed rows are provably redundant; re-check the full system anyway.
  std::vector<Rational> sol(n_unknowns);
  for (int c = 0; c < n_unknowns; ++c) sol[col_of[col_order[c]]] = x[c];
  for (int row = 0; row < n_rows; ++row) {
    Rational acc;
    for (int c = 0; c < n_unknowns; ++c) acc += A[row][c] * sol[c];
    if (acc != r[row]) throw std::logic_error("beta solution fails the full coefficient system");
  }

  std::map<std::pair<int, int>, Rational> beta;
  for (const auto& [jl, c] : col_of)
    if (sol[c] != 0) beta[jl] = sol[c];
  return beta;
}

BdfScheme bdf_scheme(int k) {
  BdfScheme s = bdf_coefficients(k);
  s.beta = beta_coefficients(k);
  return s;
}

double verify_identity(const BdfScheme& scheme, std::span<const double> a, double s, int n) {
  (void)s;  // the powers of s cancel between d_t^j and s^{2j}
  const int k = scheme.k;
  if (n < k || n >= static_cast<int>(a.size()))
    throw std::invalid_argument("verify_identity: window [n-k, n] out of range");
  if (scheme.beta.empty()) throw std::invalid_argument("verify_identity: scheme lacks beta");

  double quad = 0.0, dot = 0.0, extrap = 0.0;
  for (int j = 0; j <= k; ++j) {
    const double d = to_double(scheme.delta[j]);
    quad += d * a[n - j] * a[n - j];
    dot += d * a[n - j];
  }
  for (int j = 0; j < k; ++j) extrap += to_double(scheme.gamma[j]) * a[n - j - 1];
  const double lhs = quad - 2.0 * dot * extrap;

  double rhs = 0.0;
  for (const auto& [jl, b] : scheme.beta) {
    const auto [j, l] = jl;
    double diff = 0.0;
    for (int q = 0; q <= j; ++q) {
      const double w = static_cast<double>(binomial(j, q).convert_to<long long>());
      diff += (q % 2 == 0 ? w : -w) * a[n - l - q];
    }
    rhs += to_double(b) * diff * diff;
  }
  return std::abs(lhs - rhs);
}

EtaSequence eta_coefficients(int k, int n_max) {
  check_order(k, 1);
  const BdfScheme s = bdf_coefficients(k);
  std::vector<double> td(k);
  for (int j = 0; j < k; ++j) td[j] = to_double(s.tilde_delta[j]);

  EtaSequence eta;
  eta.k = k;
  eta.values.resize(n_max + 1, 0.0);
  eta.values[0] = 1.0 / td[0];
  for (int n = 1; n <= n_max; ++n) {
    double acc = 0.0;
    for (int j = 1; j < k && j <= n; ++j) acc += td[j] * eta.values[n - j];
    eta.values[n] = -acc / td[0];
  }
  return eta;
}

std::vector<std::complex<double>> characteristic_roots(int k) {
  check_order(k, 2);
  const BdfScheme s = bdf_coefficients(k);
  const int d = k - 1;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(d, d);
  const double lead = to_double(s.tilde_delta[d]);
  for (int i = 0; i < d; ++i) companion(i, d - 1) = -to_double(s.tilde_delta[i]) / lead;
  for (int i = 1; i < d; ++i) companion(i, i - 1) = 1.0;

  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("characteristic_roots: eigensolver failed");
  std::vector<std::complex<double>> roots(d);
  for (int i = 0; i < d; ++i) roots[i] = solver.eigenvalues()(i);
  std::sort(roots.begin(), roots.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return roots;
}

StabilityCondition stability_condition(int k) {
  if (k < 3 || k > kMaxBdfOrder)
    throw std::invalid_argument("stability_condition requires 3 <= k <= 6");
  const BdfScheme s = bdf_coefficients(k);
  const Rational b = -s.tilde_delta[1] / s.delta[0];
  Rational acc;
  for (int j = 2; j < k; ++j) {
    const Rational t = s.tilde_delta[j] + b * s.tilde_delta[j - 1];
    acc += t * t;
  }
  acc += b * b * s.tilde_delta[k - 1] * s.tilde_delta[k - 1];
  const Rational value = k * acc / (s.delta[0] * s.delta[0]);
  return {to_double(value), value < 1};
}

}  // namespace cflow
