#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fragmentor/exppoly.hpp"
#include "fragmentor/process.hpp"
#include "fragmentor/trees.hpp"

namespace fragmentor {

/// P(𝓕_t(T)) for one fragmentation tree.
struct TreeLawTerm {
  FragTree tree;
  double value = 0.0;
  /// Some closed-form denominator vanished; value came from the exact
  /// recursive convolution instead.
  bool degenerate = false;
};

/// Closed-form tree law (inclusion–exclusion over erased edge sets), falling
/// back to the recursion when a denominator is below 1e-9·|ρ|.
TreeLawTerm tree_law(const ProcessModel& model, const FragTree& tree, double t);

/// The closed form only; nullopt when a denominator vanishes.
std::optional<double> tree_law_closed_form(const RateFamily& rho, const FragTree& tree, double t);

/// The tree law as an exponential polynomial in t, from the convolution
/// recursion F_β(s) = ∫_0^s ρ_β e^{-h(I_β)u} Π_a F_a(s-u) du.
ExpPoly tree_law_recursive(const RateFamily& rho, const FragTree& tree);

enum class LawMethod { formula, semigroup, montecarlo };

std::string_view to_string(LawMethod method);
LawMethod parse_law_method(std::string_view name);

struct LawDiagnostics {
  // formula
  std::size_t tree_count = 0;
  std::size_t degenerate_trees = 0;
  // semigroup
  std::size_t uniformization_steps = 0;
  std::size_t uniformization_terms = 0;
  double truncation_bound = 0.0;
  // montecarlo
  std::size_t replicates = 0;
  std::uint64_t seed = 0;
};

/// Distribution of X_t started from {I}, indexed like model.states().
struct LawReport {
  double t = 0.0;
  LawMethod method = LawMethod::semigroup;
  std::vector<double> probabilities;
  /// Monte Carlo standard errors sqrt(p(1-p)/n); empty for exact methods.
  std::vector<double> std_errors;
  LawDiagnostics diagnostics;
};

struct LawOptions {
  std::size_t tree_cap = kDefaultTreeCap;
  unsigned threads = 1;
};

LawReport law_distribution(const ProcessModel& model, double t, const LawOptions& options = {});
LawReport semigroup_distribution(const ProcessModel& model, double t);

/// Jump skeleton of one path on [0, horizon]; `states` holds model indices,
/// starting at {I}.
struct Trajectory {
  std::vector<double> jump_times;
  std::vector<std::size_t> states;
  double horizon = 0.0;
};

struct SimulationOptions {
  unsigned threads = 1;
  bool keep_trajectories = false;
};

struct SimulationResult {
  LawReport report;
  std::vector<Trajectory> trajectories;  // filled when keep_trajectories
};

/// n independent jump-chain paths to time t; replicate r uses
/// replicate_stream(seed, r).
SimulationResult simulate(const ProcessModel& model, double t, std::size_t n, std::uint64_t seed,
                          const SimulationOptions& options = {});

/// Path of replicate `replicate` (the same path `simulate` draws).
Trajectory simulate_one(const ProcessModel& model, double t, std::uint64_t seed,
                        std::uint64_t replicate);

/// The fragmentation tree whose event the path realizes.
FragTree classify_trajectory(const Trajectory& trajectory, const ProcessModel& model);

}  // namespace fragmentor
