#include "cflow/study.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace cflow {

void benchmark_boundary_datum(double x, double y, std::span<double> out) {
  const double r2 = x * x + y * y;
  const double w = 1.0 / (1.0 + r2);
  out[0] = w * std::numbers::sqrt2 * (x - y);
  out[1] = w * std::numbers::sqrt2 * (x + y);
  out[2] = w * (1.0 - r2);
}

void benchmark_initial_state(double x, double y, std::span<double> out) {
  benchmark_boundary_datum(x, y, out);
  const double bump = (x - 0.5) * (x + 0.5) * (y - 0.5) * (y + 0.5);
  const double g0 = 1.0 - 100.0 * bump * std::sin(0.5 * std::numbers::pi * x);
  const double g1 = 1.0 - 100.0 * bump * 8.0 * std::sin(0.5 * std::numbers::pi * y);
  const double g2 = 1.0 - 100.0 * bump * 16.0 * (x - y) * std::cos(8.0 * std::numbers::pi * (x + y));
  out[0] *= g0;
  out[1] *= g1;
  out[2] *= g2;
  const double norm = std::sqrt(out[0] * out[0] + out[1] * out[1] + out[2] * out[2]);
  out[0] /= norm;
  out[1] /= norm;
  out[2] /= norm;
}

BenchmarkSetup run_benchmark_setup(int mesh_n) {
  BenchmarkSetup setup{make_space(build_uniform_mesh(mesh_n), 3), {}, {}};
  setup.u0 = nodal_interpolate(setup.space, benchmark_initial_state);
  setup.boundary_data = nodal_interpolate(setup.space, benchmark_boundary_datum);
  return setup;
}

void StudyConfig::validate() const {
  if (mesh_n < 1) throw std::invalid_argument("study: mesh_n must be >= 1");
  if (schemes.empty()) throw std::invalid_argument("study: no schemes given");
  if (s_list.empty()) throw std::invalid_argument("study: empty step-size list");
  for (std::size_t i = 0; i + 1 < s_list.size(); ++i)
    if (!(s_list[i + 1] < s_list[i]))
      throw std::invalid_argument("study: step sizes must strictly decrease");
  for (double s : s_list)
    if (!(s > 0.0)) throw std::invalid_argument("study: step sizes must be positive");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(trim(item));
  return parts;
}

}  // namespace

StudyConfig parse_study_config(std::istream& in) {
  StudyConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("study config line " + std::to_string(line_no) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "benchmark") {
      if (value != "anisotropic_dirichlet")
        throw std::invalid_argument("study config: unknown benchmark " + value);
    } else if (key == "mesh_n") {
      cfg.mesh_n = std::stoi(value);
    } else if (key == "m_diag") {
      const auto parts = split(value, ',');
      if (parts.size() != 2) throw std::invalid_argument("study config: m_diag needs two entries");
      cfg.m_diag = {std::stod(parts[0]), std::stod(parts[1])};
    } else if (key == "schemes") {
      for (const auto& name : split(value, ',')) cfg.schemes.push_back(parse_scheme(name));
    } else if (key == "metric") {
      if (value == "l2")
        cfg.metric = MetricKind::kL2;
      else if (value == "h1")
        cfg.metric = MetricKind::kH1;
      else
        throw std::invalid_argument("study config: metric must be l2 or h1");
    } else if (key == "alpha") {
      cfg.alpha = std::stod(value);
    } else if (key == "eps") {
      cfg.eps = std::stod(value);
    } else if (key == "s_list") {
      for (const auto& sv : split(value, ',')) cfg.s_list.push_back(std::stod(sv));
    } else if (key == "t_max") {
      cfg.t_max = std::stod(value);
    } else if (key == "kkt_tol") {
      cfg.kkt_tol = std::stod(value);
    } else if (key == "oracle") {
      cfg.oracle = (value == "on" || value == "true" || value == "1");
    } else {
      throw std::invalid_argument("study config: unknown key " + key);
    }
  }
  return cfg;
}

StudyConfig load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open study config: " + path);
  return parse_study_config(in);
}

std::vector<StudyRow> run_study(const StudyConfig& cfg) {
  cfg.validate();
  const BenchmarkSetup setup = run_benchmark_setup(cfg.mesh_n);
  std::vector<StudyRow> rows;
  for (const auto& [scheme, k] : cfg.schemes) {
    double prev_s = kNaN, prev_delta = kNaN;
    for (double s : cfg.s_list) {
      FlowConfig flow;
      flow.scheme = scheme;
      flow.k = k;
      flow.s = s;
      flow.alpha = cfg.alpha;
      flow.metric = cfg.metric;
      flow.eps = cfg.eps;
      flow.t_max = cfg.t_max;
      flow.kkt_tol = cfg.kkt_tol;
      flow.oracle = cfg.oracle;

      const FlowOperators ops = assemble_operators(setup.space, cfg.m_diag, cfg.metric);
      const auto t0 = std::chrono::steady_clock::now();
      FlowResult result;
      try {
        result = run_flow(setup.space, ops, flow, setup.u0);
      } catch (const std::exception& e) {
        throw std::runtime_error("study run (" + scheme_name(scheme, k) + ", s=" +
                                 std::to_string(s) + ") failed: " + e.what());
      }
      const auto t1 = std::chrono::steady_clock::now();

      StudyRow row;
      row.scheme = scheme_name(scheme, k);
      row.metric = cfg.metric == MetricKind::kH1 ? "h1" : "l2";
      row.s = s;
      row.iterations = result.steps;
      const DiagnosticsRecord& last = result.records.back();
      row.delta_cons = last.delta_cons;
      row.energy = last.energy;
      const RegularityReport reg = regularity_sums(result.records, s);
      row.s_sigma2 = reg.s_sigma2;
      row.s2_sigma3 = reg.s2_sigma3;
      row.rho = reg.rho;
      row.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
      if (std::isfinite(prev_s) && prev_delta > 0.0 && row.delta_cons > 0.0)
        row.eoc = std::log(prev_delta / row.delta_cons) / std::log(prev_s / s);
      prev_s = s;
      prev_delta = row.delta_cons;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace {

std::string fmt(double v, const char* spec = "%.10e") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

void write_csv(const std::vector<StudyRow>& rows, std::ostream& out) {
  out << "scheme,metric,s,iterations,delta_cons,eoc,s_sigma2,s2_sigma3,rho,energy\n";
  for (const auto& r : rows)
    out << r.scheme << ',' << r.metric << ',' << fmt(r.s) << ',' << r.iterations << ','
        << fmt(r.delta_cons) << ',' << fmt(r.eoc, "%.4f") << ',' << fmt(r.s_sigma2) << ','
        << fmt(r.s2_sigma3) << ',' << fmt(r.rho) << ',' << fmt(r.energy) << '\n';
}

void print_table(const std::vector<StudyRow>& rows, std::ostream& out) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %-3s %-12s %8s %-12s %6s %-11s %-11s %-11s %-11s %8s",
                "scheme", "met", "s", "iters", "delta_cons", "eoc", "s*sigma2", "s2*sigma3", "rho",
                "energy", "wall[s]");
  out << buf << '\n';
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf,
                  "%-10s %-3s %-12.6g %8ld %-12.4e %6.2f %-11.4g %-11.4g %-11.4g %-11.6g %8.2f",
                  r.scheme.c_str(), r.metric.c_str(), r.s, r.iterations, r.delta_cons, r.eoc,
                  r.s_sigma2, r.s2_sigma3, r.rho, r.energy, r.wall_seconds);
    out << buf << '\n';
  }
}

}  // namespace cflow
