#pragma once

#include <limits>
#include <span>
#include <vector>

#include "cflow/bdf_algebra.hpp"
#include "cflow/fem.hpp"

namespace cflow {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Per-step monitor values of a flow run.
struct DiagnosticsRecord {
  int n = 0;
  double energy = 0.0;        // E[u^n] = (1/2) M(u^n, u^n)
  double kinetic_sq = 0.0;    // ||velocity||_U^2
  double lyapunov = kNaN;     // scheme-specific decaying quantity
  double delta_cons = 0.0;    // L1 nodal violation
  double max_violation = 0.0; // max_z |B(u,u)(z) - 1|
  double oracle_mismatch = kNaN;   // max_z |predicted - measured|, NaN when oracle off
  double stopping_residual = kNaN;
  double identity_residual = kNaN; // per-step energy identity, NaN where undefined
  double tangency_error = 0.0;     // max_z |anchor(z) . velocity(z)| this step
  double dt1_sq = kNaN;  // ||d_t u^n||_U^2
  double dt2_sq = kNaN;  // ||d_t^2 u^n||_U^2
  double dt3_sq = kNaN;  // ||d_t^3 u^n||_U^2
  int kkt_iterations = 0;
};

struct RegularityReport {
  double sigma2 = kNaN;  // sum_{n>=3} ||d_t^2 u^n||_U^2
  double sigma3 = kNaN;  // sum_{n>=3} ||d_t^3 u^n||_U^2
  double rho = kNaN;     // max_{n>=1} ||d_t^2 u^n||_U^2
  double s_sigma2 = kNaN;
  double s2_sigma3 = kNaN;
};

/// G_M(u, v) = M(u-v, u-v) + (3/2) M(u,u) - (1/2) M(v,v), the quadratic form
/// behind the two-step energy decay. G_M(u,u) = M(u,u).
double g_form(const SymmetricSparseOperator& form, std::span<const double> u,
              std::span<const double> v);

/// Eigenvalues of the 2x2 coefficient matrix of G_M, bounding
/// lambda1 (M(u,u)+M(v,v)) <= G_M(u,v) <= lambda2 (M(u,u)+M(v,v)).
inline constexpr double kGFormLambda1 = 0.0857864376269049512;  // (3 - 2 sqrt 2)/2
inline constexpr double kGFormLambda2 = 2.9142135623730950488;  // (3 + 2 sqrt 2)/2

/// Running per-vertex prediction of the constraint violation b_n = |u^n(z)|^2 - 1
/// from the recurrences
///   z_n = z_{n-1} + phi_n,  phi_n = sum_{j,l} beta_{jl} |s^j d_t^j u^{n-l}(z)|^2,
///   tilde_delta_0 b_n = z_n - sum_{j=1}^{k-1} tilde_delta_j b_{n-j},
/// seeded with the measured violations b_1..b_{k-1} and
/// z_{k-1} = sum_j tilde_delta_j |u^{k-1-j}(z)|^2 - 1. Keeps z and the last
/// k-1 violation fields per vertex; memory does not grow with n.
class ViolationOracle {
 public:
  ViolationOracle(const BdfScheme& scheme, int vertex_count, int components);

  /// Record a measured per-vertex violation field (steps 1..k-1).
  void feed_measured(std::vector<double> b);

  /// Predict b_n at step n >= k. `states` spans u^{n-k}..u^n, oldest first,
  /// each a full coefficient vector. Returns the per-vertex prediction.
  const std::vector<double>& advance(std::span<const std::span<const double>> states);

  const std::vector<double>& predicted() const { return predicted_; }
  /// Accumulated z_n (valid after the first advance).
  const std::vector<double>& z_state() const { return z_; }
  int order() const { return k_; }

 private:
  int k_;
  int nv_;
  int m_;
  std::vector<double> tilde_delta_;
  std::vector<std::pair<std::pair<int, int>, double>> beta_;
  std::vector<double> z_;
  std::vector<std::vector<double>> b_hist_;  // b_hist_[j] = b at step n-1-j
  std::vector<double> predicted_;
  bool started_ = false;
};

/// sigma/rho sums of eq-style regularity monitors over the recorded steps.
RegularityReport regularity_sums(std::span<const DiagnosticsRecord> records, double s);

/// Pairwise experimental orders log(d_i/d_{i+1}) / log(s_i/s_{i+1}); requires
/// strictly decreasing s and positive violations.
std::vector<double> eoc(std::span<const std::pair<double, double>> s_delta_pairs);

/// Assembles the state-dependent record fields (energies, violation norms,
/// oracle mismatch against `oracle_predicted` when provided).
DiagnosticsRecord measure(const FeSpace& space, const SymmetricSparseOperator& stiffness,
                          const SymmetricSparseOperator& metric, int n, std::span<const double> u,
                          std::span<const double> velocity,
                          const std::vector<double>* oracle_predicted);

}  // namespace cflow
