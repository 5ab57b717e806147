#include "cflow/flows.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cflow {

namespace {

struct SchemeTable {
  std::vector<double> delta, tilde_delta, gamma;
};

// double-precision delta / tilde_delta / gamma for orders 1..4 (flows stop at k=4)
const SchemeTable& scheme_table(int k) {
  static const std::vector<SchemeTable> tables = [] {
    std::vector<SchemeTable> t;
    for (int order = 1; order <= 4; ++order) {
      const BdfScheme s = bdf_coefficients(order);
      SchemeTable tab;
      for (const auto& d : s.delta) tab.delta.push_back(to_double(d));
      for (const auto& d : s.tilde_delta) tab.tilde_delta.push_back(to_double(d));
      for (const auto& g : s.gamma) tab.gamma.push_back(to_double(g));
      t.push_back(std::move(tab));
    }
    return t;
  }();
  if (k < 1 || k > 4) throw std::invalid_argument("flow order must be in 1..4");
  return tables[k - 1];
}

// First step index at which the scheme's stopping rule applies.
int stopping_start(const FlowConfig& cfg) {
  switch (cfg.scheme) {
    case Scheme::kAfBdf1: return 1;
    case Scheme::kAfBdf2: return 3;
    case Scheme::kAfBdfkModified: return cfg.order();
    case Scheme::kGfBdf1:
    case Scheme::kGfBdf2: return 1;
  }
  return 1;
}

void zero_boundary(const FeSpace& space, std::span<double> x) {
  const int m = space.components;
  for (int v = 0; v < space.mesh.vertex_count(); ++v)
    if (space.mesh.boundary_vertex[v])
      for (int c = 0; c < m; ++c) x[static_cast<std::size_t>(v) * m + c] = 0.0;
}

// Solves one constrained velocity system (a G + b K) v = c G vel_prev - K lin
// on the tangent space at `anchor`, Dirichlet dofs pinned to zero.
std::vector<double> constrained_solve(const FeSpace& space, const FlowOperators& ops,
                                      const FlowConfig& cfg, FlowHistory& hist, double a, double b,
                                      double vel_coeff, const std::vector<double>& lin,
                                      const std::vector<double>& anchor) {
  const SymmetricSparseOperator A =
      combine_masked(ops.metric, ops.stiffness, a, b, space.mesh.boundary_vertex);
  const std::size_t dim = space.dof_count();
  std::vector<double> rhs(dim, 0.0), tmp(dim);
  if (vel_coeff != 0.0) {
    ops.metric.apply(hist.velocity, tmp);
    kernels::axpy(vel_coeff, tmp, rhs);
  }
  ops.stiffness.apply(lin, tmp);
  kernels::axpy(-1.0, tmp, rhs);
  zero_boundary(space, rhs);

  const NodalConstraint constraint = build_constraint_rows(space, anchor);
  hist.degenerate_events += static_cast<int>(constraint.degenerate_vertices.size());

  KktSystem sys;
  sys.primal_block = &A;
  sys.constraint_rows = constraint.rows;
  sys.rhs_primal = std::move(rhs);
  const std::vector<double> diag = A.diagonal();
  KktSolution sol = solve_kkt(sys, cfg.kkt_tol, diag, hist.velocity);
  hist.kkt_iterations = sol.iterations;
  hist.tangency_error = max_tangency_error(space, constraint, anchor, sol.primal);
  return std::move(sol.primal);
}

// sum_j weights[j] * u^{n-1-j}, taken before the new state is pushed.
std::vector<double> linear_combination(const FlowHistory& hist, std::span<const double> weights) {
  std::vector<double> out(hist.state(0).size(), 0.0);
  for (std::size_t j = 0; j < weights.size(); ++j)
    kernels::axpy(weights[j], hist.state(static_cast<int>(j)), out);
  return out;
}

std::vector<double> diff(std::span<const double> x, std::span<const double> y) {
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = x[i] - y[i];
  return d;
}

// M(tilde_u^{n-back}, tilde_u^{n-back}) with order-p tilde weights, states
// addressed after the newest push.
double tilde_energy(const FlowOperators& ops, const FlowHistory& hist, int order, int back) {
  const auto& td = scheme_table(order).tilde_delta;
  std::vector<double> tilde(hist.state(0).size(), 0.0);
  for (int j = 0; j < order; ++j) kernels::axpy(td[j], hist.state(back + j), tilde);
  return ops.stiffness.quad(tilde, tilde);
}

}  // namespace

std::string scheme_name(Scheme scheme, int k) {
  switch (scheme) {
    case Scheme::kAfBdf1: return "af_bdf1";
    case Scheme::kAfBdf2: return "af_bdf2";
    case Scheme::kAfBdfkModified: return "af_bdfk" + std::to_string(k);
    case Scheme::kGfBdf1: return "gf_bdf1";
    case Scheme::kGfBdf2: return "gf_bdf2";
  }
  throw std::logic_error("scheme_name: unknown scheme");
}

std::pair<Scheme, int> parse_scheme(const std::string& name) {
  if (name == "af_bdf1") return {Scheme::kAfBdf1, 1};
  if (name == "af_bdf2") return {Scheme::kAfBdf2, 2};
  if (name == "gf_bdf1") return {Scheme::kGfBdf1, 1};
  if (name == "gf_bdf2") return {Scheme::kGfBdf2, 2};
  if (name.rfind("af_bdfk", 0) == 0 && name.size() == 8) {
    const int k = name[7] - '0';
    if (k >= 1 && k <= 4) return {Scheme::kAfBdfkModified, k};
  }
  throw std::invalid_argument("unknown scheme name: " + name);
}

int FlowConfig::order() const {
  switch (scheme) {
    case Scheme::kAfBdf1:
    case Scheme::kGfBdf1: return 1;
    case Scheme::kAfBdf2:
    case Scheme::kGfBdf2: return 2;
    case Scheme::kAfBdfkModified: return k;
  }
  throw std::logic_error("FlowConfig::order: unknown scheme");
}

void FlowConfig::validate() const {
  if (!(s > 0.0)) throw std::invalid_argument("FlowConfig: s must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("FlowConfig: eps must be positive");
  if (!(alpha >= 3.0)) throw std::invalid_argument("FlowConfig: alpha must be >= 3");
  if (!(t_max > 0.0)) throw std::invalid_argument("FlowConfig: t_max must be positive");
  if (!(kkt_tol > 0.0)) throw std::invalid_argument("FlowConfig: kkt_tol must be positive");
  if (scheme == Scheme::kAfBdfkModified && (k < 1 || k > 4))
    throw std::invalid_argument("FlowConfig: modified scheme supports k in 1..4");
}

FlowOperators assemble_operators(const FeSpace& space, const std::array<double, 2>& m_diag,
                                 MetricKind metric) {
  return {assemble_anisotropic_stiffness(space, m_diag), assemble_metric(space, metric)};
}

void FlowHistory::push_state(std::vector<double> u, std::size_t capacity) {
  states.push_back(std::move(u));
  while (states.size() > capacity) states.pop_front();
}

FlowHistory init_history(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                         std::vector<double> u0) {
  if (u0.size() != static_cast<std::size_t>(space.dof_count()))
    throw std::invalid_argument("init_history: u0 size mismatch");
  FlowHistory hist;
  hist.states.push_back(std::move(u0));
  hist.velocity.assign(space.dof_count(), 0.0);
  hist.velocity_prev.assign(space.dof_count(), 0.0);
  const double m_u0 = ops.stiffness.quad(hist.state(0), hist.state(0));
  // G_M(u,u) = M(u,u) and tilde_u^0 = u^0, so all accelerated variants start
  // from the same value; gradient flows track E = M/2.
  const bool gf = cfg.scheme == Scheme::kGfBdf1 || cfg.scheme == Scheme::kGfBdf2;
  hist.lyapunov = gf ? 0.5 * m_u0 : m_u0;
  if (cfg.oracle)
    hist.oracle = std::make_unique<ViolationOracle>(bdf_scheme(cfg.order()),
                                                    space.mesh.vertex_count(), space.components);
  return hist;
}

void af_bdf1_step(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                  FlowHistory& hist) {
  const int n = hist.n + 1;
  const double s = cfg.s;
  const auto& u_prev = hist.state(0);
  const double a = (1.0 + cfg.alpha / n) / s;
  std::vector<double> v = constrained_solve(space, ops, cfg, hist, a, s, 1.0 / s, u_prev, u_prev);

  std::vector<double> u = u_prev;
  kernels::axpy(s, v, u);
  hist.push_state(std::move(u), static_cast<std::size_t>(cfg.order()) + 1);
  hist.velocity_prev = std::move(hist.velocity);
  hist.velocity = std::move(v);
  hist.n = n;

  const double kin = ops.metric.quad(hist.velocity, hist.velocity);
  const double kin_prev = ops.metric.quad(hist.velocity_prev, hist.velocity_prev);
  hist.lyapunov_prev = hist.lyapunov;
  hist.lyapunov = ops.stiffness.quad(hist.state(0), hist.state(0)) + kin;
  const double rhs = ops.stiffness.quad(hist.state(1), hist.state(1)) + kin_prev;
  const std::vector<double> dv = diff(hist.velocity, hist.velocity_prev);
  const double lhs = hist.lyapunov + (2.0 * cfg.alpha / n) * kin + ops.metric.quad(dv, dv) +
                     s * s * ops.stiffness.quad(hist.velocity, hist.velocity);
  hist.identity_residual = std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
  hist.stopping_residual = std::abs(hist.lyapunov - rhs) / (2.0 * s);
  hist.stopping_residual_defined = n >= stopping_start(cfg);
}

void af_bdf2_init(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                  FlowHistory& hist) {
  if (hist.n != 0) throw std::logic_error("af_bdf2_init: expected history at n = 0");
  af_bdf1_step(space, ops, cfg, hist);
  // Algorithm 2 tracks the G-form total energy from here on.
  hist.lyapunov = g_form(ops.stiffness, hist.state(0), hist.state(1)) +
                  ops.metric.quad(hist.velocity, hist.velocity);
}

namespace {

// Shared body of the transition step (n = 2) and the regular step (n >= 3) of
// the two-step accelerated scheme, and of its gradient-flow counterpart.
void bdf2_type_step(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                    FlowHistory& hist, bool accelerated) {
  const int n = hist.n + 1;
  const double s = cfg.s;
  const auto& u1 = hist.state(0);  // u^{n-1}
  const auto& u2 = hist.state(1);  // u^{n-2}

  std::vector<double> lin(u1.size()), anchor(u1.size());
  for (std::size_t i = 0; i < u1.size(); ++i) {
    lin[i] = (4.0 * u1[i] - u2[i]) / 3.0;
    anchor[i] = 2.0 * u1[i] - u2[i];
  }
  const double a = accelerated ? (1.0 + cfg.alpha / n) / s : 1.0;
  const double c = accelerated ? 1.0 / s : 0.0;
  std::vector<double> v =
      constrained_solve(space, ops, cfg, hist, a, 2.0 * s / 3.0, c, lin, anchor);

  std::vector<double> u(u1.size());
  for (std::size_t i = 0; i < u1.size(); ++i) u[i] = (4.0 * u1[i] - u2[i] + 2.0 * s * v[i]) / 3.0;
  hist.push_state(std::move(u), 3);
  hist.velocity_prev = std::move(hist.velocity);
  hist.velocity = std::move(v);
  hist.n = n;

  hist.lyapunov_prev = hist.lyapunov;
  if (accelerated) {
    const double kin = ops.metric.quad(hist.velocity, hist.velocity);
    hist.lyapunov = g_form(ops.stiffness, hist.state(0), hist.state(1)) + kin;
    // One-step energy identity: total energy plus decay terms balances the
    // previous total energy.
    const std::vector<double> dv = diff(hist.velocity, hist.velocity_prev);
    std::vector<double> w(hist.state(0).size());
    for (std::size_t i = 0; i < w.size(); ++i)
      w[i] = hist.state(0)[i] - 2.0 * hist.state(1)[i] + hist.state(2)[i];
    const double lhs = hist.lyapunov + (2.0 * cfg.alpha / n) * kin + ops.metric.quad(dv, dv) +
                       0.5 * ops.stiffness.quad(w, w);
    hist.identity_residual =
        std::abs(lhs - hist.lyapunov_prev) / std::max(1.0, std::abs(hist.lyapunov_prev));
    hist.stopping_residual = std::abs(hist.lyapunov - hist.lyapunov_prev) / (2.0 * s);
  } else {
    hist.lyapunov = 0.5 * ops.stiffness.quad(hist.state(0), hist.state(0));
    hist.identity_residual = kNaN;
    hist.stopping_residual = std::abs(hist.lyapunov - hist.lyapunov_prev) / s;
  }
  hist.stopping_residual_defined = n >= stopping_start(cfg);
}

}  // namespace

void af_bdf2_transition(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                        FlowHistory& hist) {
  if (hist.n != 1) throw std::logic_error("af_bdf2_transition: expected history at n = 1");
  bdf2_type_step(space, ops, cfg, hist, /*accelerated=*/true);
}

void af_bdf2_step(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                  FlowHistory& hist) {
  if (hist.n < 2) throw std::logic_error("af_bdf2_step: requires n >= 2");
  bdf2_type_step(space, ops, cfg, hist, /*accelerated=*/true);
}

void af_bdfk_modified_step(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                           FlowHistory& hist, int order) {
  const int n = hist.n + 1;
  if (order < 1 || order > 4) throw std::invalid_argument("af_bdfk_modified_step: order in 1..4");
  if (n < order || static_cast<int>(hist.states.size()) < order)
    throw std::logic_error("af_bdfk_modified_step: not enough history for the requested order");
  const double s = cfg.s;
  const SchemeTable& tab = scheme_table(order);

  const std::vector<double> lin =
      linear_combination(hist, std::span<const double>(tab.tilde_delta.data(), order));
  const std::vector<double> anchor =
      linear_combination(hist, std::span<const double>(tab.gamma.data(), order));

  const double a = (1.0 + cfg.alpha / n) / s;
  std::vector<double> v = constrained_solve(space, ops, cfg, hist, a, s, 1.0 / s, lin, anchor);

  // u^n = (s v - sum_{j>=1} delta_j u^{n-j}) / delta_0
  std::vector<double> u(v.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = s * v[i];
  for (int j = 1; j <= order; ++j) kernels::axpy(-tab.delta[j], hist.state(j - 1), u);
  const double inv_d0 = 1.0 / tab.delta[0];
  for (std::size_t i = 0; i < u.size(); ++i) u[i] *= inv_d0;
  hist.push_state(std::move(u), static_cast<std::size_t>(cfg.order()) + 1);
  hist.velocity_prev = std::move(hist.velocity);
  hist.velocity = std::move(v);
  hist.n = n;

  const double kin = ops.metric.quad(hist.velocity, hist.velocity);
  const double kin_prev = ops.metric.quad(hist.velocity_prev, hist.velocity_prev);
  hist.lyapunov_prev = hist.lyapunov;
  hist.lyapunov = tilde_energy(ops, hist, order, 0) + kin;
  const double rhs = tilde_energy(ops, hist, order, 1) + kin_prev;
  const std::vector<double> dv = diff(hist.velocity, hist.velocity_prev);
  const double lhs = hist.lyapunov + (2.0 * cfg.alpha / n) * kin + ops.metric.quad(dv, dv) +
                     s * s * ops.stiffness.quad(hist.velocity, hist.velocity);
  hist.identity_residual = std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
  hist.stopping_residual = std::abs(hist.lyapunov - rhs) / (2.0 * s);
  hist.stopping_residual_defined = n >= stopping_start(cfg);
}

void initialize_modified(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                         FlowHistory& hist) {
  if (hist.n != 0) throw std::logic_error("initialize_modified: expected history at n = 0");
  for (int p = 1; p < cfg.order(); ++p) af_bdfk_modified_step(space, ops, cfg, hist, p);
}

void gf_step(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
             FlowHistory& hist) {
  const int n = hist.n + 1;
  const double s = cfg.s;
  if (cfg.scheme == Scheme::kGfBdf2 && n >= 2) {
    bdf2_type_step(space, ops, cfg, hist, /*accelerated=*/false);
    return;
  }
  // BDF-1 gradient flow (also the warm-up step of the BDF-2 variant)
  const auto& u_prev = hist.state(0);
  std::vector<double> v = constrained_solve(space, ops, cfg, hist, 1.0, s, 0.0, u_prev, u_prev);
  std::vector<double> u = u_prev;
  kernels::axpy(s, v, u);
  hist.push_state(std::move(u), static_cast<std::size_t>(cfg.order()) + 1);
  hist.velocity_prev = std::move(hist.velocity);
  hist.velocity = std::move(v);
  hist.n = n;
  hist.lyapunov_prev = hist.lyapunov;
  hist.lyapunov = 0.5 * ops.stiffness.quad(hist.state(0), hist.state(0));
  hist.identity_residual = kNaN;
  hist.stopping_residual = std::abs(hist.lyapunov - hist.lyapunov_prev) / s;
  hist.stopping_residual_defined = n >= stopping_start(cfg);
}

FlowResult run_flow(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                    std::vector<double> u0) {
  cfg.validate();
  FlowHistory hist = init_history(space, ops, cfg, std::move(u0));
  const int k = cfg.order();
  const long long max_steps = static_cast<long long>(std::floor(cfg.t_max / cfg.s + 1e-12));

  FlowResult result;
  result.reason = Termination::kTimeLimit;
  double max_mismatch = -1.0;

  for (long long n = 1; n <= max_steps; ++n) {
    try {
      switch (cfg.scheme) {
        case Scheme::kAfBdf1: af_bdf1_step(space, ops, cfg, hist); break;
        case Scheme::kAfBdf2:
          if (n == 1)
            af_bdf2_init(space, ops, cfg, hist);
          else if (n == 2)
            af_bdf2_transition(space, ops, cfg, hist);
          else
            af_bdf2_step(space, ops, cfg, hist);
          break;
        case Scheme::kAfBdfkModified:
          af_bdfk_modified_step(space, ops, cfg, hist, std::min<int>(static_cast<int>(n), k));
          break;
        case Scheme::kGfBdf1:
        case Scheme::kGfBdf2: gf_step(space, ops, cfg, hist); break;
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("flow step " + std::to_string(n) + ": " + e.what());
    }

    const std::vector<double>* predicted = nullptr;
    if (hist.oracle) {
      if (hist.n < k) {
        hist.oracle->feed_measured(violation_field(space, hist.state(0)));
      } else {
        std::vector<std::span<const double>> spans;
        spans.reserve(hist.states.size());
        for (const auto& st : hist.states) spans.emplace_back(st);
        predicted = &hist.oracle->advance(spans);
      }
    }

    DiagnosticsRecord rec =
        measure(space, ops.stiffness, ops.metric, hist.n, hist.state(0), hist.velocity, predicted);
    rec.lyapunov = hist.lyapunov;
    rec.identity_residual = hist.identity_residual;
    rec.tangency_error = hist.tangency_error;
    rec.kkt_iterations = hist.kkt_iterations;
    rec.stopping_residual = hist.stopping_residual_defined ? hist.stopping_residual : kNaN;

    // Discrete time-derivative norms in the flow metric. At n = 1 the
    // convention u^{-1} := u^0 applies (zero initial velocity).
    const double s = cfg.s;
    const std::size_t dim = hist.state(0).size();
    {
      std::vector<double> d(dim);
      const auto& un = hist.state(0);
      const auto& un1 = hist.state(1);
      for (std::size_t i = 0; i < dim; ++i) d[i] = (un[i] - un1[i]) / s;
      rec.dt1_sq = ops.metric.quad(d, d);
      if (hist.n == 1) {
        for (std::size_t i = 0; i < dim; ++i) d[i] = (un[i] - un1[i]) / (s * s);
        rec.dt2_sq = ops.metric.quad(d, d);
      } else if (hist.states.size() >= 3) {
        const auto& un2 = hist.state(2);
        for (std::size_t i = 0; i < dim; ++i) d[i] = (un[i] - 2.0 * un1[i] + un2[i]) / (s * s);
        rec.dt2_sq = ops.metric.quad(d, d);
      } else if (k == 1) {
        // two-state ring: d_t^2 u^n from the velocity pair, d_t v = d_t^2 u
        for (std::size_t i = 0; i < dim; ++i)
          d[i] = (hist.velocity[i] - hist.velocity_prev[i]) / s;
        rec.dt2_sq = ops.metric.quad(d, d);
      }
      if (hist.states.size() >= 4 && hist.n >= 3) {
        const auto& un2 = hist.state(2);
        const auto& un3 = hist.state(3);
        for (std::size_t i = 0; i < dim; ++i)
          d[i] = (un[i] - 3.0 * un1[i] + 3.0 * un2[i] - un3[i]) / (s * s * s);
        rec.dt3_sq = ops.metric.quad(d, d);
      }
    }

    result.records.push_back(rec);
    result.max_tangency_error = std::max(result.max_tangency_error, rec.tangency_error);
    if (predicted != nullptr && std::isfinite(rec.oracle_mismatch))
      max_mismatch = std::max(max_mismatch, rec.oracle_mismatch);

    if (hist.stopping_residual_defined && hist.stopping_residual <= cfg.eps) {
      result.reason = Termination::kConverged;
      break;
    }
  }

  result.final_state = hist.state(0);
  result.steps = hist.n;
  result.degenerate_events = hist.degenerate_events;
  if (max_mismatch >= 0.0) result.max_oracle_mismatch = max_mismatch;
  return result;
}

}  // namespace cflow
