#include "fragmentor/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fragmentor/errors.hpp"

namespace fragmentor {

namespace {

constexpr std::size_t kAbsent = std::numeric_limits<std::size_t>::max();
// Largest uniformized mass per step.
constexpr double kMaxStepMass = 32.0;
constexpr double kTailTolerance = 1e-17;

}  // namespace

SubGenerator SubGenerator::full(const ProcessModel& model) {
  std::vector<std::size_t> all(model.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return restricted(model, std::move(all));
}

SubGenerator SubGenerator::restricted(const ProcessModel& model, std::vector<std::size_t> states) {
  SubGenerator g;
  g.local_of_model_.assign(model.size(), kAbsent);
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (states[k] >= model.size() || g.local_of_model_[states[k]] != kAbsent) {
      throw ValidationError("sub-generator: invalid or repeated state index");
    }
    g.local_of_model_[states[k]] = k;
  }
  g.states_ = std::move(states);
  g.rows_.resize(g.states_.size());
  g.exit_.resize(g.states_.size());
  g.min_exit_ = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < g.states_.size(); ++k) {
    const std::size_t i = g.states_[k];
    g.exit_[k] = model.exit_rate(i);
    g.max_exit_ = std::max(g.max_exit_, g.exit_[k]);
    g.min_exit_ = std::min(g.min_exit_, g.exit_[k]);
    for (const Transition& tr : model.transitions(i)) {
      const std::size_t local = g.local_of_model_[tr.target];
      if (local != kAbsent) g.rows_[k].push_back({local, tr.rate});
    }
  }
  if (g.states_.empty()) g.min_exit_ = 0.0;
  return g;
}

std::optional<std::size_t> SubGenerator::local_index(std::size_t model_index) const {
  if (model_index >= local_of_model_.size() || local_of_model_[model_index] == kAbsent) {
    return std::nullopt;
  }
  return local_of_model_[model_index];
}

void SubGenerator::apply_kernel(std::span<const double> in, std::span<double> out,
                                double uniform_rate) const {
  for (std::size_t k = 0; k < size(); ++k) out[k] = in[k] * (1.0 - exit_[k] / uniform_rate);
  for (std::size_t k = 0; k < size(); ++k) {
    const double mass = in[k];
    if (mass == 0.0) continue;
    for (const Entry& e : rows_[k]) out[e.target] += mass * e.rate / uniform_rate;
  }
}

double ScaledVector::at(std::size_t i) const {
  const double v = values.at(i);
  return v == 0.0 ? 0.0 : v * std::exp(log_scale);
}

double ScaledVector::sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s == 0.0 ? 0.0 : s * std::exp(log_scale);
}

double ScaledVector::log_sum() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s > 0.0 ? std::log(s) + log_scale : -std::numeric_limits<double>::infinity();
}

ScaledVector propagate_scaled(const SubGenerator& gen, std::span<const double> v, double t,
                              UniformizationStats* stats) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ValidationError("time must be finite and >= 0");
  if (v.size() != gen.size()) throw ValidationError("propagate: vector size mismatch");
  ScaledVector result{std::vector<double>(v.begin(), v.end()), 0.0};
  UniformizationStats local;
  const double rate = gen.max_exit_rate();
  if (t == 0.0 || rate == 0.0 || gen.size() == 0) {
    if (stats) *stats = local;
    return result;
  }
  const auto steps = static_cast<std::size_t>(std::ceil(rate * t / kMaxStepMass));
  const double h = t / static_cast<double>(steps);
  const double x = rate * h;

  std::vector<double> power(gen.size());
  std::vector<double> next(gen.size());
  std::vector<double> acc(gen.size());
  for (std::size_t s = 0; s < steps; ++s) {
    std::copy(result.values.begin(), result.values.end(), power.begin());
    std::fill(acc.begin(), acc.end(), 0.0);
    double weight = std::exp(-x);
    for (std::size_t k = 0;; ++k) {
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weight * power[i];
      ++local.terms;
      const double next_weight = weight * x / static_cast<double>(k + 1);
      // Tail Σ_{j>k} w_j ≤ w_{k+1} / (1 - x/(k+2)) once k+2 > x.
      if (static_cast<double>(k + 2) > x) {
        const double tail = next_weight / (1.0 - x / static_cast<double>(k + 2));
        if (tail < kTailTolerance) {
          local.truncation_bound += tail;
          break;
        }
      }
      gen.apply_kernel(power, next, rate);
      power.swap(next);
      weight = next_weight;
    }
    double peak = 0.0;
    for (double a : acc) peak = std::max(peak, std::abs(a));
    if (peak == 0.0) {
      result.values.assign(gen.size(), 0.0);
      result.log_scale = 0.0;
      break;
    }
    for (std::size_t i = 0; i < acc.size(); ++i) result.values[i] = acc[i] / peak;
    result.log_scale += std::log(peak);
    ++local.steps;
  }
  if (stats) *stats = local;
  return result;
}

std::vector<double> propagate(const SubGenerator& gen, std::span<const double> v, double t,
                              UniformizationStats* stats) {
  ScaledVector scaled = propagate_scaled(gen, v, t, stats);
  const double factor = std::exp(scaled.log_scale);
  for (double& x : scaled.values) x = x == 0.0 ? 0.0 : x * factor;
  return std::move(scaled.values);
}

std::vector<double> semigroup_row(const ProcessModel& model, std::size_t from, double t,
                                  UniformizationStats* stats) {
  std::vector<double> v(model.size(), 0.0);
  v.at(from) = 1.0;
  return propagate(SubGenerator::full(model), v, t, stats);
}

Matrix semigroup_matrix(const SubGenerator& gen, double t) {
  Matrix out(gen.size(), gen.size());
  std::vector<double> v(gen.size());
  for (std::size_t i = 0; i < gen.size(); ++i) {
    std::fill(v.begin(), v.end(), 0.0);
    v[i] = 1.0;
    std::vector<double> row = propagate(gen, v, t);
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return out;
}

Matrix semigroup_matrix(const ProcessModel& model, double t) {
  return semigroup_matrix(SubGenerator::full(model), t);
}

}  // namespace fragmentor
