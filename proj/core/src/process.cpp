#include "fragmentor/process.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>
#include <limits>
#include <string>

#include "fragmentor/errors.hpp"

namespace fragmentor {

namespace {

bool splits(const SetPartition& gamma, SiteMask subset) {
  return (gamma.atom_of(lowest_site(subset)) & subset) != subset;
}

}  // namespace

RateFamily RateFamily::create(SiteMask carrier, std::vector<RateEntry> entries) {
  if (carrier == 0) throw ValidationError("rate family: empty site set");
  if (entries.empty()) throw ValidationError("rate family: at least one rate is required");
  std::set<SetPartition> seen;
  for (const RateEntry& e : entries) {
    if (e.partition.carrier() != carrier) {
      throw ValidationError("rate family: partition " + e.partition.to_string() +
                            " does not cover exactly the site set");
    }
    if (!(e.rate > 0.0) || !std::isfinite(e.rate)) {
      throw ValidationError("rate family: rate for " + e.partition.to_string() +
                            " must be finite and > 0, got " + std::to_string(e.rate));
    }
    if (e.partition.is_trivial()) {
      throw ValidationError("rate family: the trivial partition {I} cannot carry a rate");
    }
    if (!seen.insert(e.partition).second) {
      throw ValidationError("rate family: duplicate partition " + e.partition.to_string());
    }
  }
  RateFamily rho;
  rho.carrier_ = carrier;
  std::sort(entries.begin(), entries.end(),
            [](const RateEntry& a, const RateEntry& b) { return a.partition < b.partition; });
  rho.entries_ = std::move(entries);
  for (const RateEntry& e : rho.entries_) rho.total_ += e.rate;
  return rho;
}

RateFamily RateFamily::marginal(const RateFamily& rho, SiteMask subset) {
  if (subset == 0 || (subset & ~rho.carrier()) != 0) {
    throw ValidationError("marginal rates: subset must be a nonempty part of the site set");
  }
  std::map<SetPartition, double> summed;
  for (const RateEntry& e : rho.entries_) {
    SetPartition gp = restrict(e.partition, subset);
    if (gp.is_trivial()) continue;
    summed[gp] += e.rate;
  }
  RateFamily out;
  out.carrier_ = subset;
  for (auto& [p, r] : summed) {
    out.entries_.push_back({p, r});
    out.total_ += r;
  }
  return out;
}

std::vector<SetPartition> RateFamily::support() const {
  std::vector<SetPartition> out;
  out.reserve(entries_.size());
  for (const RateEntry& e : entries_) out.push_back(e.partition);
  return out;
}

double RateFamily::hold_rate(SiteMask subset) const {
  double sum = 0.0;
  for (const RateEntry& e : entries_) {
    if (splits(e.partition, subset)) sum += e.rate;
  }
  return sum;
}

std::optional<std::size_t> ProcessModel::find(const SetPartition& p) const {
  auto it = index_.find(p);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t ProcessModel::index_of(const SetPartition& p) const {
  if (auto i = find(p)) return *i;
  throw ValidationError("partition " + p.to_string() + " is not a state of the process");
}

double ProcessModel::generator(std::size_t i, std::size_t j) const {
  if (i == j) return -exit_rates_.at(i);
  for (const Transition& tr : transitions_.at(i)) {
    if (tr.target == j) return tr.rate;
  }
  return 0.0;
}

Matrix ProcessModel::generator_matrix() const {
  Matrix q(size(), size());
  for (std::size_t i = 0; i < size(); ++i) {
    q(i, i) = -exit_rates_[i];
    for (const Transition& tr : transitions_[i]) q(i, tr.target) = tr.rate;
  }
  return q;
}

ProcessModel closure(const RateFamily& rho, std::size_t state_cap) {
  const SiteMask universe = rho.carrier();
  const SetPartition root = SetPartition::trivial(universe);

  // Breadth-first discovery; outgoing rates kept by target partition.
  std::unordered_map<SetPartition, std::size_t> found;
  std::vector<SetPartition> discovered;
  std::vector<std::map<SetPartition, double>> out_rates;
  std::deque<std::size_t> work;

  auto discover = [&](const SetPartition& p) {
    auto [it, inserted] = found.try_emplace(p, discovered.size());
    if (inserted) {
      if (discovered.size() >= state_cap) {
        throw ValidationError("state space exceeds the cap of " + std::to_string(state_cap) +
                              " states; raise --state-cap or shrink the model");
      }
      discovered.push_back(p);
      out_rates.emplace_back();
      work.push_back(it->second);
    }
  };

  discover(root);
  while (!work.empty()) {
    const std::size_t i = work.front();
    work.pop_front();
    const SetPartition current = discovered[i];
    std::map<SetPartition, double> rates;
    for (const RateEntry& e : rho.entries()) {
      for (SiteMask atom : current.atoms()) {
        SetPartition piece = restrict(e.partition, atom);
        if (piece.is_trivial()) continue;
        rates[replace_atom(current, atom, piece)] += e.rate;
      }
    }
    for (const auto& [target, r] : rates) discover(target);
    out_rates[i] = std::move(rates);
  }

  // Topological order: fewer atoms first, ties by canonical order.
  std::vector<std::size_t> order(discovered.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& pa = discovered[a];
    const auto& pb = discovered[b];
    if (pa.size() != pb.size()) return pa.size() < pb.size();
    return pa < pb;
  });

  ProcessModel model;
  model.rates_ = rho;
  model.states_.reserve(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    model.states_.push_back(discovered[order[k]]);
    model.index_.emplace(model.states_.back(), k);
  }
  model.transitions_.resize(order.size());
  model.exit_rates_.assign(order.size(), 0.0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto& row = model.transitions_[k];
    for (const auto& [target, r] : out_rates[order[k]]) {
      row.push_back({model.index_.at(target), r});
    }
    std::sort(row.begin(), row.end(),
              [](const Transition& a, const Transition& b) { return a.target < b.target; });
    double exit = 0.0;
    for (const Transition& tr : row) exit += tr.rate;
    model.exit_rates_[k] = exit;
  }

  if (!model.transitions_.back().empty()) {
    throw ConsistencyError("closure: the finest state " + model.gamma_star().to_string() +
                           " is not absorbing");
  }
  SetPartition expected = root;
  for (const RateEntry& e : rho.entries()) expected = join(expected, e.partition);
  if (expected != model.gamma_star()) {
    throw ConsistencyError("closure: last state differs from the join of all keys");
  }
  return model;
}

double marginal_rate(const RateFamily& rho, SiteMask subset, const SetPartition& gp) {
  if (gp.carrier() != subset) {
    throw ValidationError("marginal_rate: partition " + gp.to_string() +
                          " is not a partition of the subset");
  }
  double sum = 0.0;
  for (const RateEntry& e : rho.entries()) {
    if (restrict(e.partition, subset) == gp) sum += e.rate;
  }
  return sum;
}

double lambda_hold(const RateFamily& rho, SiteMask subset) {
  return std::exp(-rho.hold_rate(subset));
}

double lambda_partition(const RateFamily& rho, const SetPartition& p) {
  double exponent = 0.0;
  for (SiteMask a : p.atoms()) exponent += rho.hold_rate(a);
  return std::exp(-exponent);
}

ProcessModel marginal_model(const RateFamily& rho, SiteMask subset, std::size_t state_cap) {
  return closure(RateFamily::marginal(rho, subset), state_cap);
}

GenericRatesCheck check_generic_rates(const ProcessModel& model, double rel_tol) {
  const RateFamily& rho = model.rates();
  std::set<SiteMask> carriers{model.universe()};
  for (const SetPartition& s : model.states()) {
    for (SiteMask a : s.atoms()) carriers.insert(a);
  }
  GenericRatesCheck check;
  check.smallest_gap = std::numeric_limits<double>::infinity();
  const double tol = rel_tol * rho.total();
  for (SiteMask carrier : carriers) {
    if (site_count(carrier) < 2) continue;
    const ProcessModel sub = marginal_model(rho, carrier);
    const double hold = rho.hold_rate(carrier);
    for (std::size_t k = 1; k < sub.size(); ++k) {
      double leaves = 0.0;
      for (SiteMask a : sub.state(k).atoms()) leaves += rho.hold_rate(a);
      const double gap = std::abs(hold - leaves);
      if (gap < check.smallest_gap) {
        check.smallest_gap = gap;
        check.worst_carrier = carrier;
        check.worst_partition = sub.state(k);
      }
    }
  }
  check.passed = !(check.smallest_gap < tol);
  return check;
}

}  // namespace fragmentor
