#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "fragmentor/law.hpp"
#include "fragmentor/partitions.hpp"
#include "fragmentor/process.hpp"

namespace fragmentor {

inline constexpr std::size_t kMaxMeasureStates = 1000000;

/// Alphabet sizes |A_i| for the sites of a carrier, in increasing site order.
struct AlphabetSpec {
  SiteMask carrier = 0;
  std::vector<int> sizes;

  /// Validates sizes ≥ 2 and the 10^6 state guard.
  static AlphabetSpec create(SiteMask carrier, std::vector<int> sizes);
  std::size_t states() const;
  /// Alphabet size of `site` (which must lie in the carrier).
  int size_of(int site) const;
  AlphabetSpec restrict_to(SiteMask subset) const;
  bool operator==(const AlphabetSpec&) const = default;
};

/// Dense tensor over Π_{i∈carrier} A_i, row-major in site order (the highest
/// site varies fastest). The empty carrier holds the single weight 1.
class Measure {
 public:
  Measure() : weights_{1.0} {}
  /// No probability checks; used for signed intermediates.
  Measure(AlphabetSpec spec, std::vector<double> weights);
  /// Checks weights ≥ -1e-12 and total mass 1 ± 1e-9.
  static Measure probability(AlphabetSpec spec, std::vector<double> weights);
  static Measure uniform(AlphabetSpec spec);

  const AlphabetSpec& spec() const { return spec_; }
  SiteMask carrier() const { return spec_.carrier; }
  std::span<const double> weights() const& { return weights_; }
  std::span<const double> weights() const&& = delete;
  std::vector<double>& mutable_weights() { return weights_; }
  double mass() const;
  double min_weight() const;

 private:
  AlphabetSpec spec_;
  std::vector<double> weights_;
};

Measure marginal(const Measure& mu, SiteMask subset);
Measure product(std::span<const Measure> parts);
Measure product(const Measure& a, const Measure& b);
/// R_p(μ) = ⊗_{L∈p} μ_L.
Measure recombine(const Measure& mu, const SetPartition& p);
/// L1 distance of the weight tensors.
double tv_norm(const Measure& mu, const Measure& nu);

enum class SolveMethod { recsol, ode, approx };
std::string_view to_string(SolveMethod method);
SolveMethod parse_solve_method(std::string_view name);

struct SolutionDiagnostics {
  std::optional<LawMethod> law_method;   // recsol
  double step = 0.0;                     // ode
  std::size_t steps = 0;                 // ode
  double mass_drift = 0.0;               // |mass - 1|
  std::optional<double> scaled_remainder;  // approx: e^{ηt}·‖Ξ_tμ − approx‖
  bool below_burn_in = false;            // approx: t(β0 − η) < 3
};

struct SolutionReport {
  double t = 0.0;
  Measure solution;
  SolveMethod method = SolveMethod::recsol;
  SolutionDiagnostics diagnostics;
};

/// Ξ_tμ = Σ_δ P(X_t = δ) R_δ(μ) with the law from `law_method`
/// (formula or semigroup).
SolutionReport solve(const ProcessModel& model, const Measure& mu, double t,
                     LawMethod law_method = LawMethod::semigroup, const LawOptions& options = {});

/// Fixed-step RK4 for dω/dt = Σ_γ ρ_γ (R_γ ω − ω); n = ceil(t/h) steps of t/n.
SolutionReport ode_oracle(const ProcessModel& model, const Measure& mu, double t, double h);

/// μ̄ = R_{γ*}(μ).
Measure stationary_measure(const ProcessModel& model, const Measure& mu);

/// μ̄ + e^{-ηt} Σ_{δ∈𝒱} E[e^{ητ_δ}; τ_δ<∞] (R_δ(μ) − μ̄).
SolutionReport approx_solution(const ProcessModel& model, const Measure& mu, double t);

/// e^{ηt}·‖Ξ_tμ − approx_t μ‖, evaluated without cancellation at large t.
double scaled_approx_remainder(const ProcessModel& model, const Measure& mu, double t);

}  // namespace fragmentor
