#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "fragmentor/matrix.hpp"
#include "fragmentor/process.hpp"

namespace fragmentor {

/// Decay rate η, the slowest set 𝒱 and the quasi-limiting distribution.
/// State sets are model indices in increasing order.
struct QuasiLimitReport {
  std::vector<std::size_t> delta_set;  // Δ = {δ ≠ γ* : δ ⤳ γ*}
  double eta = 0.0;
  std::vector<std::size_t> V;
  double beta0 = 0.0;                  // +inf when every state lies in 𝒱 ∪ {γ*}
  std::vector<double> transforms;      // E[e^{ητ_δ}; τ_δ<∞] from {I}, aligned with V
  double normalizer = 0.0;             // Σ transforms
  std::vector<double> qld;             // over all model states, zero outside V
};

QuasiLimitReport quasi_limit(const ProcessModel& model);

/// x ↦ E_x[e^{η τ_target}; τ_target < ∞] for every state x, with
/// 1 on `targets` and 0 where the targets cannot be reached.
std::vector<double> hitting_transform(const ProcessModel& model, const std::vector<std::size_t>& targets,
                                      double eta);

/// Law of X_t given τ > t, over all model states (γ* gets 0).
std::vector<double> conditional_distribution(const ProcessModel& model, double t);

/// e^{ηt}·P(τ > t), computed without underflow.
double scaled_survival(const ProcessModel& model, double eta, double t);

/// e^{ηt}·P(X_t = δ) for every δ (γ* reported as 0).
std::vector<double> scaled_transient_law(const ProcessModel& model, std::size_t from, double eta,
                                         double t);

struct DecayCertificate {
  bool trivial = false;        // U empty, or {I} ∉ U: the probability is 0 for t > 0
  std::string note;
  double beta0 = 0.0;
  double theta = 0.0;
  std::vector<double> grid;
  std::vector<double> log_probability;  // log P(∀u≤t: X_u ∈ U) on the grid
  double slope = 0.0;                   // fitted d/dt log P on the tail of the grid
  double fitted_C = 0.0;                // min C with P(t) ≤ C (e^{-β0}+θ)^t on the grid
  bool slope_ok = false;                // slope ≤ -β0 + tolerance
  bool monotone = true;
};

DecayCertificate decay_certificate(const ProcessModel& model, double theta);

struct QProcess {
  std::vector<std::size_t> support;  // ∂_𝒱
  std::vector<double> phi;           // aligned with support
  Matrix generator;                  // Q̂ over support
  double eta = 0.0;
  double max_row_sum = 0.0;          // max |Σ_j Q̂_ij|
  double eigen_residual = 0.0;       // max |P^t φ − e^{-ηt} φ| over t ∈ {0.5, 1}
};

QProcess qprocess(const ProcessModel& model);

}  // namespace fragmentor
