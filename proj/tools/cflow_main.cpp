#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include "cflow/bdf_algebra.hpp"
#include "cflow/flows.hpp"
#include "cflow/study.hpp"

namespace {

using namespace cflow;

void print_rational_row(const char* name, const std::vector<Rational>& values) {
  std::printf("%-12s", name);
  for (const auto& v : values) std::printf(" %10s", v.str().c_str());
  std::printf("\n");
}

int cmd_verify_bdf(int k, const std::string& csv_path) {
  const BdfScheme scheme = bdf_scheme(k);
  std::printf("BDF-%d coefficient families (exact)\n", k);
  print_rational_row("delta", scheme.delta);
  print_rational_row("tilde_delta", scheme.tilde_delta);
  print_rational_row("gamma", scheme.gamma);
  std::printf("beta (j,l) ->");
  for (const auto& [jl, v] : scheme.beta)
    std::printf("  (%d,%d): %s", jl.first, jl.second, v.str().c_str());
  std::printf("\n");

  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(k + 1);
    for (auto& x : a) x = dist(rng);
    worst = std::max(worst, verify_identity(scheme, a, 0.1, k));
  }
  std::printf("identity residual over 100 random sequences: max %.3e\n", worst);

  const EtaSequence eta = eta_coefficients(k, 12);
  std::printf("eta[0..6]:");
  for (int i = 0; i <= 6 && i < static_cast<int>(eta.values.size()); ++i)
    std::printf(" %.6g", eta.values[i]);
  std::printf("\n");

  if (k >= 2) {
    std::printf("roots of tilde_delta(z):");
    for (const auto& r : characteristic_roots(k))
      std::printf(" %.6g%+.6gi (|z|=%.4f)", r.real(), r.imag(), std::abs(r));
    std::printf("\n");
  }
  if (k >= 3) {
    const StabilityCondition cond = stability_condition(k);
    std::printf("summability condition value %.6f -> %s\n", cond.value,
                cond.holds ? "holds" : "fails");
  }

  if (!csv_path.empty()) {
    std::ofstream out(csv_path);
    if (!out) throw std::runtime_error("cannot open " + csv_path);
    out << "family,j,l,numerator,denominator\n";
    for (std::size_t j = 0; j < scheme.delta.size(); ++j)
      out << "delta," << j << ",," << numerator(scheme.delta[j]) << ","
          << denominator(scheme.delta[j]) << "\n";
    for (std::size_t j = 0; j < scheme.tilde_delta.size(); ++j)
      out << "tilde_delta," << j << ",," << numerator(scheme.tilde_delta[j]) << ","
          << denominator(scheme.tilde_delta[j]) << "\n";
    for (std::size_t j = 0; j < scheme.gamma.size(); ++j)
      out << "gamma," << j << ",," << numerator(scheme.gamma[j]) << ","
          << denominator(scheme.gamma[j]) << "\n";
    for (const auto& [jl, v] : scheme.beta)
      out << "beta," << jl.first << "," << jl.second << "," << numerator(v) << ","
          << denominator(v) << "\n";
  }
  return 0;
}

void print_record_header() {
  std::printf("%8s %14s %12s %14s %12s %12s %12s %12s %12s %6s\n", "n", "energy", "kinetic",
              "lyapunov", "delta_cons", "oracle_gap", "stop_res", "ident_res", "tangency", "cg");
}

void print_record(const DiagnosticsRecord& r) {
  std::printf("%8d %14.8e %12.4e %14.8e %12.4e %12.4e %12.4e %12.4e %12.4e %6d\n", r.n, r.energy,
              r.kinetic_sq, r.lyapunov, r.delta_cons, r.oracle_mismatch, r.stopping_residual,
              r.identity_residual, r.tangency_error, r.kkt_iterations);
}

int cmd_run(const std::string& scheme_str, double s, int mesh_n, double alpha,
            const std::string& metric_str, double eps, double t_max, double kkt_tol, bool oracle,
            int every, const std::string& out_path) {
  FlowConfig cfg;
  const auto [scheme, k] = parse_scheme(scheme_str);
  cfg.scheme = scheme;
  cfg.k = k;
  cfg.s = s;
  cfg.alpha = alpha;
  cfg.metric = metric_str == "l2" ? MetricKind::kL2 : MetricKind::kH1;
  cfg.eps = eps;
  cfg.t_max = t_max;
  cfg.kkt_tol = kkt_tol;
  cfg.oracle = oracle;

  const BenchmarkSetup setup = run_benchmark_setup(mesh_n);
  const FlowOperators ops = assemble_operators(setup.space, {1.0, 10.0}, cfg.metric);
  const FlowResult res = run_flow(setup.space, ops, cfg, setup.u0);

  print_record_header();
  for (const auto& rec : res.records)
    if (rec.n % every == 0 || rec.n == res.steps) print_record(rec);
  const RegularityReport reg = regularity_sums(res.records, cfg.s);
  std::printf("terminated: %s after %d steps; delta_cons %.6e, energy %.6f\n",
              res.reason == Termination::kConverged ? "converged" : "time limit", res.steps,
              res.records.back().delta_cons, res.records.back().energy);
  std::printf("s*sigma2 %.6g  s^2*sigma3 %.6g  rho %.6g  max|anchor.v| %.3e  degenerate %d\n",
              reg.s_sigma2, reg.s2_sigma3, reg.rho, res.max_tangency_error,
              res.degenerate_events);

  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    out << "n,energy,kinetic_sq,lyapunov,delta_cons,max_violation,oracle_mismatch,"
           "stopping_residual,identity_residual,tangency_error,kkt_iterations\n";
    char buf[512];
    for (const auto& r : res.records) {
      std::snprintf(buf, sizeof buf,
                    "%d,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,%.10e,%d\n", r.n, r.energy,
                    r.kinetic_sq, r.lyapunov, r.delta_cons, r.max_violation, r.oracle_mismatch,
                    r.stopping_residual, r.identity_residual, r.tangency_error, r.kkt_iterations);
      out << buf;
    }
  }
  return 0;
}

int cmd_study(const std::string& config_path, const std::string& out_path) {
  const StudyConfig cfg = load_study_config(config_path);
  const std::vector<StudyRow> rows = run_study(cfg);
  print_table(rows, std::cout);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open " + out_path);
    write_csv(rows, out);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"constrained-minimization flows for quadratic energies"};
  app.require_subcommand(1);

  auto* verify = app.add_subcommand("verify-bdf", "print BDF coefficient tables and checks");
  int k = 2;
  std::string verify_csv;
  verify->add_option("--k", k, "BDF order (1..6)")->required();
  verify->add_option("--csv", verify_csv, "write the coefficient tables as CSV");

  auto* run = app.add_subcommand("run", "single flow run on the benchmark problem");
  std::string scheme = "af_bdf2", metric = "h1", run_out;
  double s = 0.125, alpha = 25.0, eps = 1e-8, t_max = 1e4, kkt_tol = 1e-12;
  int mesh_n = 64, every = 1;
  bool no_oracle = false;
  run->add_option("--scheme", scheme, "af_bdf1 | af_bdf2 | af_bdfk1..4 | gf_bdf1 | gf_bdf2")
      ->required();
  run->add_option("--s", s, "pseudo-time step")->required();
  run->add_option("--mesh-n", mesh_n, "mesh subdivisions per side");
  run->add_option("--alpha", alpha, "damping parameter (>= 3)");
  run->add_option("--metric", metric, "flow metric: h1 | l2");
  run->add_option("--eps", eps, "stopping tolerance");
  run->add_option("--t-max", t_max, "pseudo-time horizon");
  run->add_option("--kkt-tol", kkt_tol, "linear solver tolerance");
  run->add_option("--every", every, "print every Nth record");
  run->add_flag("--no-oracle", no_oracle, "disable the violation oracle");
  run->add_option("--out", run_out, "write the record stream as CSV");

  auto* study = app.add_subcommand("study", "run a (scheme, step-size) sweep");
  std::string config_path, study_out;
  study->add_option("--config", config_path, "study config file")->required();
  study->add_option("--out", study_out, "output CSV path");

  auto* mesh = app.add_subcommand("mesh", "export the uniform mesh as plain text");
  int mesh_export_n = 4;
  std::string mesh_out;
  mesh->add_option("--n", mesh_export_n, "subdivisions per side")->required();
  mesh->add_option("--out", mesh_out, "output path (default stdout)");

  CLI11_PARSE(app, argc, argv);
  try {
    if (verify->parsed()) return cmd_verify_bdf(k, verify_csv);
    if (run->parsed())
      return cmd_run(scheme, s, mesh_n, alpha, metric, eps, t_max, kkt_tol, !no_oracle, every,
                     run_out);
    if (study->parsed()) return cmd_study(config_path, study_out);
    if (mesh->parsed()) {
      const Mesh m = build_uniform_mesh(mesh_export_n);
      if (mesh_out.empty()) {
        export_mesh(m, std::cout);
      } else {
        std::ofstream out(mesh_out);
        if (!out) throw std::runtime_error("cannot open " + mesh_out);
        export_mesh(m, out);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
