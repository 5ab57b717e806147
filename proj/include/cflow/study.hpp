#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "cflow/fem.hpp"
#include "cflow/flows.hpp"

namespace cflow {

/// Nodal data of the anisotropic Dirichlet benchmark on (-1/2,1/2)^2:
/// boundary datum m(x) (pointwise unit), oscillatory weight g(x), and the
/// normalized initial state u0 = (m .* g)/|m .* g|.
void benchmark_boundary_datum(double x, double y, std::span<double> out);
void benchmark_initial_state(double x, double y, std::span<double> out);

struct BenchmarkSetup {
  FeSpace space;
  std::vector<double> u0;             // nodal interpolant, unit at every vertex
  std::vector<double> boundary_data;  // nodal interpolant of the boundary datum
};

BenchmarkSetup run_benchmark_setup(int mesh_n);

struct StudyConfig {
  int mesh_n = 64;
  std::array<double, 2> m_diag{1.0, 10.0};
  std::vector<std::pair<Scheme, int>> schemes;
  MetricKind metric = MetricKind::kH1;
  double alpha = 25.0;
  double eps = 1e-8;
  std::vector<double> s_list;  // strictly decreasing
  double t_max = 1e4;
  double kkt_tol = 1e-12;
  bool oracle = true;

  void validate() const;
};

/// Flat key = value file; '#' starts a comment. Keys: benchmark, mesh_n,
/// m_diag, schemes, metric, alpha, eps, s_list, t_max, kkt_tol, oracle.
StudyConfig parse_study_config(std::istream& in);
StudyConfig load_study_config(const std::string& path);

struct StudyRow {
  std::string scheme;
  std::string metric;
  double s = 0.0;
  long iterations = 0;
  double delta_cons = 0.0;
  double eoc = kNaN;  // versus the previous row of the same scheme
  double s_sigma2 = kNaN;
  double s2_sigma3 = kNaN;
  double rho = kNaN;
  double energy = 0.0;
  double wall_seconds = 0.0;  // informational, kept out of the CSV
};

/// One row per (scheme, s); deterministic output for a fixed config.
std::vector<StudyRow> run_study(const StudyConfig& cfg);

/// Fixed-header CSV (excludes wall time so reruns are bit-identical).
void write_csv(const std::vector<StudyRow>& rows, std::ostream& out);
void print_table(const std::vector<StudyRow>& rows, std::ostream& out);

}  // namespace cflow
