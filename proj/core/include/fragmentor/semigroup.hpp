#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fragmentor/matrix.hpp"
#include "fragmentor/process.hpp"

namespace fragmentor {

/// Generator of a fragmentation chain restricted to a subset of its states.
/// Transitions leaving the subset become killing, so exp(tQ_sub) is the
/// sub-semigroup of paths that stay inside the subset.
class SubGenerator {
 public:
  static SubGenerator full(const ProcessModel& model);
  /// `states` are model indices; order is preserved as the local order.
  static SubGenerator restricted(const ProcessModel& model, std::vector<std::size_t> states);

  std::size_t size() const { return states_.size(); }
  std::span<const std::size_t> states() const { return states_; }
  std::optional<std::size_t> local_index(std::size_t model_index) const;
  double max_exit_rate() const { return max_exit_; }
  double min_exit_rate() const { return min_exit_; }

  /// One uniformization step: out = in · (I + Q_sub/uniform_rate).
  void apply_kernel(std::span<const double> in, std::span<double> out, double uniform_rate) const;

 private:
  struct Entry {
    std::size_t target;
    double rate;
  };
  std::vector<std::size_t> states_;
  std::vector<std::size_t> local_of_model_;  // npos when absent
  std::vector<std::vector<Entry>> rows_;
  std::vector<double> exit_;
  double max_exit_ = 0.0;
  double min_exit_ = 0.0;
};

/// A vector held as values · exp(log_scale).
struct ScaledVector {
  std::vector<double> values;
  double log_scale = 0.0;

  double at(std::size_t i) const;
  double sum() const;
  /// log Σ values + log_scale (−inf for the zero vector).
  double log_sum() const;
};

struct UniformizationStats {
  std::size_t steps = 0;
  std::size_t terms = 0;
  double truncation_bound = 0.0;  // sum of dropped Poisson tail mass bounds
};

/// v · exp(t Q_sub) by uniformization with time stepping; every step keeps the
/// Poisson tail below 1e-17 relative to the running vector.
ScaledVector propagate_scaled(const SubGenerator& gen, std::span<const double> v, double t,
                              UniformizationStats* stats = nullptr);

/// Unscaled convenience form of propagate_scaled.
std::vector<double> propagate(const SubGenerator& gen, std::span<const double> v, double t,
                              UniformizationStats* stats = nullptr);

/// Row `from` of exp(tQ).
std::vector<double> semigroup_row(const ProcessModel& model, std::size_t from, double t,
                                  UniformizationStats* stats = nullptr);

/// Full exp(tQ_sub), rows and columns in local order.
Matrix semigroup_matrix(const SubGenerator& gen, double t);
Matrix semigroup_matrix(const ProcessModel& model, double t);

}  // namespace fragmentor
