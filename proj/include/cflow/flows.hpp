#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cflow/bdf_algebra.hpp"
#include "cflow/constraint.hpp"
#include "cflow/diagnostics.hpp"
#include "cflow/fem.hpp"
#include "cflow/kkt.hpp"

namespace cflow {

enum class Scheme { kAfBdf1, kAfBdf2, kAfBdfkModified, kGfBdf1, kGfBdf2 };

std::string scheme_name(Scheme scheme, int k);
/// Parses names like "af_bdf1", "af_bdf2", "af_bdfk3", "gf_bdf2".
std::pair<Scheme, int> parse_scheme(const std::string& name);

struct FlowConfig {
  Scheme scheme = Scheme::kAfBdf2;
  int k = 2;  // BDF order of kAfBdfkModified; implied by the scheme otherwise
  double s = 0.125;
  double alpha = 25.0;
  MetricKind metric = MetricKind::kH1;
  double eps = 1e-8;
  double t_max = 1e4;
  double kkt_tol = 1e-12;
  bool oracle = true;

  int order() const;  // BDF order of the scheme
  void validate() const;
};

struct FlowOperators {
  SymmetricSparseOperator stiffness;  // the energy form M
  SymmetricSparseOperator metric;     // the flow metric <.,.>_U
};

FlowOperators assemble_operators(const FeSpace& space, const std::array<double, 2>& m_diag,
                                 MetricKind metric);

/// Rolling state of one run: the last k+1 iterates (oldest first), the scheme
/// velocity of the newest step, and the oracle accumulators.
struct FlowHistory {
  int n = 0;
  std::deque<std::vector<double>> states;
  std::vector<double> velocity;       // scheme velocity at step n (zero at n = 0)
  std::vector<double> velocity_prev;  // at step n-1
  double lyapunov = kNaN;
  double lyapunov_prev = kNaN;
  // Scalars of the most recent step:
  double identity_residual = kNaN;
  double stopping_residual = kNaN;
  bool stopping_residual_defined = false;
  double tangency_error = 0.0;
  int kkt_iterations = 0;
  int degenerate_events = 0;  // cumulative over the run
  std::unique_ptr<ViolationOracle> oracle;

  const std::vector<double>& state(int back = 0) const { return states[states.size() - 1 - back]; }
  void push_state(std::vector<double> u, std::size_t capacity);
};

/// History at n = 0 holding u0, velocity zero (d_t u^0 = 0 by convention).
FlowHistory init_history(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                         std::vector<double> u0);

/// One step of the two-step accelerated scheme variants. Preconditions on
/// history.n match the algorithm phases; each advances history by one step.
void af_bdf1_step(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                  FlowHistory& history);
void af_bdf2_init(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                  FlowHistory& history);  // n: 0 -> 1
void af_bdf2_transition(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                        FlowHistory& history);  // n: 1 -> 2
void af_bdf2_step(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                  FlowHistory& history);  // n >= 2 -> n+1

/// One step of the energy-stable BDF-k family at the given order (the
/// initialization chain uses order = n < k).
void af_bdfk_modified_step(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                           FlowHistory& history, int order);

/// Runs the BDF-1..BDF-(k-1) chain producing u^1..u^{k-1}.
void initialize_modified(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                         FlowHistory& history);

void gf_step(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
             FlowHistory& history);

enum class Termination { kConverged, kTimeLimit };

struct FlowResult {
  std::vector<double> final_state;
  std::vector<DiagnosticsRecord> records;  // one per step n = 1..N
  Termination reason = Termination::kTimeLimit;
  int steps = 0;
  int degenerate_events = 0;
  double max_tangency_error = 0.0;
  double max_oracle_mismatch = kNaN;  // over steps n >= order
};

FlowResult run_flow(const FeSpace& space, const FlowOperators& ops, const FlowConfig& cfg,
                    std::vector<double> u0);

}  // namespace cflow
