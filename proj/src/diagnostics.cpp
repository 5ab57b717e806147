#include "cflow/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

#include "cflow/constraint.hpp"

namespace cflow {

double g_form(const SymmetricSparseOperator& form, std::span<const double> u,
              std::span<const double> v) {
  if (u.size() != v.size()) throw std::invalid_argument("g_form: size mismatch");
  std::vector<double> diff(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) diff[i] = u[i] - v[i];
  return form.quad(diff, diff) + 1.5 * form.quad(u, u) - 0.5 * form.quad(v, v);
}

ViolationOracle::ViolationOracle(const BdfScheme& scheme, int vertex_count, int components)
    : k_(scheme.k), nv_(vertex_count), m_(components) {
  if (scheme.beta.empty()) throw std::invalid_argument("ViolationOracle: scheme lacks beta");
  tilde_delta_.reserve(k_);
  for (const auto& td : scheme.tilde_delta) tilde_delta_.push_back(to_double(td));
  for (const auto& [jl, v] : scheme.beta) beta_.emplace_back(jl, to_double(v));
}

void ViolationOracle::feed_measured(std::vector<double> b) {
  if (static_cast<int>(b_hist_.size()) >= k_ - 1)
    throw std::logic_error("ViolationOracle: too many measured seeds");
  b_hist_.insert(b_hist_.begin(), std::move(b));  // newest first
}

const std::vector<double>& ViolationOracle::advance(
    std::span<const std::span<const double>> states) {
  if (static_cast<int>(states.size()) != k_ + 1)
    throw std::invalid_argument("ViolationOracle: expected k+1 states");
  if (!started_) {
    if (static_cast<int>(b_hist_.size()) != k_ - 1)
      throw std::logic_error("ViolationOracle: missing measured seeds");
    // states[i] = u^{n-k+i} with n = k at the first advance, so states[k-1-j] = u^{k-1-j}.
    z_.assign(nv_, 0.0);
#pragma omp parallel for schedule(static) if (nv_ >= static_cast<int>(kernels::kParallelGrain / 8))
    for (int v = 0; v < nv_; ++v) {
      double acc = -1.0;
      for (int j = 0; j < k_; ++j) {
        double norm_sq = 0.0;
        for (int c = 0; c < m_; ++c) {
          const double x = states[k_ - 1 - j][static_cast<std::size_t>(v) * m_ + c];
          norm_sq += x * x;
        }
        acc += tilde_delta_[j] * norm_sq;
      }
      z_[v] = acc;
    }
    started_ = true;
  }

  predicted_.assign(nv_, 0.0);
#pragma omp parallel for schedule(static) if (nv_ >= static_cast<int>(kernels::kParallelGrain / 8))
  for (int v = 0; v < nv_; ++v) {
    double phi = 0.0;
    for (const auto& [jl, w] : beta_) {
      const auto [j, l] = jl;
      double norm_sq = 0.0;
      for (int c = 0; c < m_; ++c) {
        // s^j d_t^j u^{n-l}(z) as the exact binomial combination; u^{n-l-q} = states[k-l-q].
        double diff = 0.0;
        for (int q = 0; q <= j; ++q) {
          const double bc = static_cast<double>(binomial(j, q).convert_to<long long>());
          diff += (q % 2 == 0 ? bc : -bc) * states[k_ - l - q][static_cast<std::size_t>(v) * m_ + c];
        }
        norm_sq += diff * diff;
      }
      phi += w * norm_sq;
    }
    z_[v] += phi;
    double acc = z_[v];
    for (int j = 1; j < k_; ++j) acc -= tilde_delta_[j] * b_hist_[j - 1][v];
    predicted_[v] = acc / tilde_delta_[0];
  }

  if (k_ > 1) {
    b_hist_.insert(b_hist_.begin(), predicted_);
    if (static_cast<int>(b_hist_.size()) > k_ - 1) b_hist_.pop_back();
  }
  return predicted_;
}

RegularityReport regularity_sums(std::span<const DiagnosticsRecord> records, double s) {
  RegularityReport rep;
  double sigma2 = 0.0, sigma3 = 0.0, rho = -1.0;
  bool have2 = false, have3 = false;
  for (const auto& rec : records) {
    if (rec.n >= 3 && std::isfinite(rec.dt2_sq)) {
      sigma2 += rec.dt2_sq;
      have2 = true;
    }
    if (rec.n >= 3 && std::isfinite(rec.dt3_sq)) {
      sigma3 += rec.dt3_sq;
      have3 = true;
    }
    if (rec.n >= 1 && std::isfinite(rec.dt2_sq)) rho = std::max(rho, rec.dt2_sq);
  }
  if (have2) {
    rep.sigma2 = sigma2;
    rep.s_sigma2 = s * sigma2;
  }
  if (have3) {
    rep.sigma3 = sigma3;
    rep.s2_sigma3 = s * s * sigma3;
  }
  if (rho >= 0.0) rep.rho = rho;
  return rep;
}

std::vector<double> eoc(std::span<const std::pair<double, double>> s_delta_pairs) {
  if (s_delta_pairs.size() < 2) throw std::invalid_argument("eoc: need at least two pairs");
  std::vector<double> orders;
  for (std::size_t i = 0; i + 1 < s_delta_pairs.size(); ++i) {
    const auto& [s0, d0] = s_delta_pairs[i];
    const auto& [s1, d1] = s_delta_pairs[i + 1];
    if (!(s1 < s0)) throw std::invalid_argument("eoc: step sizes must strictly decrease");
    if (d0 <= 0.0 || d1 <= 0.0) throw std::invalid_argument("eoc: violations must be positive");
    orders.push_back(std::log(d0 / d1) / std::log(s0 / s1));
  }
  return orders;
}

DiagnosticsRecord measure(const FeSpace& space, const SymmetricSparseOperator& stiffness,
                          const SymmetricSparseOperator& metric, int n, std::span<const double> u,
                          std::span<const double> velocity,
                          const std::vector<double>* oracle_predicted) {
  DiagnosticsRecord rec;
  rec.n = n;
  rec.energy = 0.5 * stiffness.quad(u, u);
  rec.kinetic_sq = metric.quad(velocity, velocity);
  const std::vector<double> b = violation_field(space, u);
  rec.delta_cons = l1_nodal_norm(space, b);
  double worst = 0.0, mismatch = 0.0;
  for (int v = 0; v < space.mesh.vertex_count(); ++v) {
    worst = std::max(worst, std::abs(b[v]));
    if (oracle_predicted != nullptr)
      mismatch = std::max(mismatch, std::abs((*oracle_predicted)[v] - b[v]));
  }
  rec.max_violation = worst;
  if (oracle_predicted != nullptr) rec.oracle_mismatch = mismatch;
  return rec;
}

}  // namespace cflow
