#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fragmentor/matrix.hpp"
#include "fragmentor/partitions.hpp"

namespace fragmentor {

struct RateEntry {
  SetPartition partition;
  double rate = 0.0;
};

/// Recombination rates ρ over partitions of a common carrier. Keys are the
/// support 𝒢_ρ: every stored rate is strictly positive and no key is trivial.
class RateFamily {
 public:
  RateFamily() = default;

  /// Validated construction from user input: at least one entry, rates > 0 and
  /// finite, no duplicates, no trivial partition, every carrier equal to `carrier`.
  static RateFamily create(SiteMask carrier, std::vector<RateEntry> entries);

  /// Rates induced on `subset`: ρ^S_{γ'} summed over keys restricting to γ',
  /// dropping the trivial restriction. May be empty (e.g. a singleton subset).
  static RateFamily marginal(const RateFamily& rho, SiteMask subset);

  SiteMask carrier() const { return carrier_; }
  std::span<const RateEntry> entries() const& { return entries_; }
  std::span<const RateEntry> entries() const&& = delete;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  /// |ρ|, the total mass.
  double total() const { return total_; }
  std::vector<SetPartition> support() const;

  /// Σ{ρ_γ : γ splits `subset`}, i.e. -log λ_S^S.
  double hold_rate(SiteMask subset) const;

 private:
  SiteMask carrier_ = 0;
  std::vector<RateEntry> entries_;
  double total_ = 0.0;
};

struct Transition {
  std::size_t target = 0;
  double rate = 0.0;
};

inline constexpr std::size_t kDefaultStateCap = 100000;

/// The fragmentation chain compiled from a rate family: state space 𝒴*(𝒢_ρ)
/// in topological order ({I} first, γ^𝒢 last) and its sparse generator.
class ProcessModel {
 public:
  const RateFamily& rates() const { return rates_; }
  SiteMask universe() const { return rates_.carrier(); }

  std::size_t size() const { return states_.size(); }
  const std::vector<SetPartition>& states() const { return states_; }
  const SetPartition& state(std::size_t i) const { return states_.at(i); }
  std::optional<std::size_t> find(const SetPartition& p) const;
  /// Index of a state; throws ValidationError when `p` is not in the state space.
  std::size_t index_of(const SetPartition& p) const;

  static constexpr std::size_t start() { return 0; }
  std::size_t absorbing() const { return states_.size() - 1; }
  const SetPartition& gamma_star() const { return states_.back(); }

  /// Off-diagonal transitions out of state i, ordered by target index.
  std::span<const Transition> transitions(std::size_t i) const { return transitions_.at(i); }
  /// -Q_{i,i}.
  double exit_rate(std::size_t i) const { return exit_rates_.at(i); }
  double generator(std::size_t i, std::size_t j) const;
  Matrix generator_matrix() const;

 private:
  friend ProcessModel closure(const RateFamily&, std::size_t);

  RateFamily rates_;
  std::vector<SetPartition> states_;
  std::unordered_map<SetPartition, std::size_t> index_;
  std::vector<std::vector<Transition>> transitions_;
  std::vector<double> exit_rates_;
};

/// Closure of {I} under fragmentations with the generator of the fragmentation
/// process. Throws ValidationError when more than `state_cap` states appear.
ProcessModel closure(const RateFamily& rho, std::size_t state_cap = kDefaultStateCap);

/// ρ^S_{gp} = Σ{ρ_γ : γ|_S = gp}.
double marginal_rate(const RateFamily& rho, SiteMask subset, const SetPartition& gp);

/// λ_S^S = exp(-Σ{ρ_γ : γ|_S ≠ {S}}).
double lambda_hold(const RateFamily& rho, SiteMask subset);

/// λ_δ^S = Π_{a∈δ} λ_a^a.
double lambda_partition(const RateFamily& rho, const SetPartition& p);

/// The fragmentation process of the S-marginal.
ProcessModel marginal_model(const RateFamily& rho, SiteMask subset,
                            std::size_t state_cap = kDefaultStateCap);

/// Outcome of the generic-rates check: every LAWF denominator
/// log λ_L^S - log λ_S^S stays away from zero.
struct GenericRatesCheck {
  bool passed = true;
  double smallest_gap = 0.0;  // min |hold(S) - Σ_{a∈L} hold(a)| seen
  SiteMask worst_carrier = 0;
  SetPartition worst_partition;
};

/// Checks every carrier S that can host a tree node (I and every atom of every
/// state) against every non-trivial state L of the S-marginal chain.
GenericRatesCheck check_generic_rates(const ProcessModel& model, double rel_tol = 1e-9);

}  // namespace fragmentor
