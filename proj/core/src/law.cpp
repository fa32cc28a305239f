#include "fragmentor/law.hpp"

#include <bit>
#include <cmath>
#include <unordered_map>

#include "fragmentor/errors.hpp"
#include "fragmentor/parallel.hpp"
#include "fragmentor/rng.hpp"
#include "fragmentor/semigroup.hpp"

namespace fragmentor {

namespace {

constexpr std::size_t kMaxClosedFormEdges = 40;

double degeneracy_tolerance(const RateFamily& rho) { return 1e-9 * rho.total(); }

void require_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw ValidationError("time t must be finite and >= 0");
  }
}

/// Per-node data for the inclusion–exclusion sum.
struct NodeTerms {
  struct Slot {
    double hold = 0.0;  // hold rate of the atom when it stays a leaf
    int child = -1;     // node splitting the atom, if any
  };
  std::vector<Slot> slots;
  int parent = -1;
  double carrier_hold = 0.0;  // -log λ_{I_β}^{I_β}
  double rate = 0.0;          // ρ_β^{I_β}
};

std::vector<NodeTerms> node_terms(const RateFamily& rho, const OrtTree& tree) {
  std::vector<NodeTerms> out(tree.size());
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const TreeNode& n = tree.node(i);
    NodeTerms& nt = out[i];
    nt.parent = n.parent;
    nt.carrier_hold = rho.hold_rate(n.partition.carrier());
    nt.rate = marginal_rate(rho, n.partition.carrier(), n.partition);
    for (SiteMask a : n.partition.atoms()) {
      NodeTerms::Slot slot{rho.hold_rate(a), -1};
      for (int c : n.children) {
        if (tree.node(c).atom == a) slot.child = c;
      }
      nt.slots.push_back(slot);
    }
  }
  return out;
}

}  // namespace

std::optional<double> tree_law_closed_form(const RateFamily& rho, const FragTree& tree, double t) {
  require_time(t);
  if (tree.degenerate()) return std::exp(-rho.hold_rate(tree.universe) * t);
  const OrtTree& base = tree.base;
  const std::size_t edges = base.edge_count();
  if (edges > kMaxClosedFormEdges) {
    throw ValidationError("tree has " + std::to_string(edges) +
                          " edges; the closed form is limited to " +
                          std::to_string(kMaxClosedFormEdges));
  }
  const auto nodes = node_terms(rho, base);
  const double tol = degeneracy_tolerance(rho);

  // leaves[i] = Σ hold over the leaves of T_i(H) for the current H.
  std::vector<double> leaves(nodes.size(), 0.0);
  EdgeMask erased = 0;
  auto recompute = [&](std::size_t i) {
    double s = 0.0;
    for (const auto& slot : nodes[i].slots) {
      const bool kept = slot.child >= 0 && ((erased >> slot.child) & 1U) == 0;
      s += kept ? leaves[slot.child] : slot.hold;
    }
    leaves[i] = s;
  };
  for (std::size_t i = nodes.size(); i-- > 0;) recompute(i);

  double sum = 0.0;
  const std::uint64_t subsets = std::uint64_t{1} << edges;
  for (std::uint64_t g = 0; g < subsets; ++g) {
    if (g > 0) {
      // Gray code: consecutive subsets differ in edge ctz(g).
      const int child = std::countr_zero(g) + 1;
      erased ^= EdgeMask{1} << child;
      for (int node = nodes[child].parent;; node = nodes[node].parent) {
        recompute(static_cast<std::size_t>(node));
        if (node == 0 || ((erased >> node) & 1U)) break;
      }
    }
    double product = 1.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double denom = nodes[i].carrier_hold - leaves[i];
      if (std::abs(denom) < tol) return std::nullopt;
      product *= nodes[i].rate / denom;
    }
    // (λ_{𝔾(H)})^t - (λ_I)^t = e^{-t·leaves} (1 - e^{-t·(hold(I) - leaves)})
    const double diff = -std::exp(-t * leaves[0]) * std::expm1(-t * (nodes[0].carrier_hold - leaves[0]));
    const double term = diff * product;
    sum += (std::popcount(erased) % 2 == 0) ? term : -term;
  }
  return sum;
}

ExpPoly tree_law_recursive(const RateFamily& rho, const FragTree& tree) {
  const double tol = degeneracy_tolerance(rho);
  if (tree.degenerate()) return ExpPoly::exponential(rho.hold_rate(tree.universe), 1.0, tol);
  const auto nodes = node_terms(rho, tree.base);
  std::vector<ExpPoly> laws(nodes.size(), ExpPoly(tol));
  for (std::size_t i = nodes.size(); i-- > 0;) {
    ExpPoly product = ExpPoly::exponential(0.0, 1.0, tol);
    for (const auto& slot : nodes[i].slots) {
      product = product * (slot.child >= 0 ? laws[slot.child]
                                           : ExpPoly::exponential(slot.hold, 1.0, tol));
    }
    laws[i] = product.convolve_exponential(nodes[i].carrier_hold, nodes[i].rate);
  }
  return laws[0];
}

TreeLawTerm tree_law(const ProcessModel& model, const FragTree& tree, double t) {
  require_time(t);
  TreeLawTerm term{tree, 0.0, false};
  if (auto value = tree_law_closed_form(model.rates(), tree, t)) {
    term.value = *value;
  } else {
    term.degenerate = true;
    term.value = tree_law_recursive(model.rates(), tree)(t);
  }
  return term;
}

std::string_view to_string(LawMethod method) {
  switch (method) {
    case LawMethod::formula:
      return "formula";
    case LawMethod::semigroup:
      return "semigroup";
    case LawMethod::montecarlo:
      return "montecarlo";
  }
  return "unknown";
}

LawMethod parse_law_method(std::string_view name) {
  if (name == "formula") return LawMethod::formula;
  if (name == "semigroup") return LawMethod::semigroup;
  if (name == "mc" || name == "montecarlo") return LawMethod::montecarlo;
  throw ValidationError("unknown law method '" + std::string(name) +
                        "' (expected formula, semigroup or mc)");
}

LawReport law_distribution(const ProcessModel& model, double t, const LawOptions& options) {
  require_time(t);
  LawReport report;
  report.t = t;
  report.method = LawMethod::formula;
  report.probabilities.assign(model.size(), 0.0);
  std::vector<std::size_t> tree_counts(model.size(), 0);
  std::vector<std::size_t> degenerate_counts(model.size(), 0);
  parallel_chunks(model.size(), options.threads, [&](std::size_t begin, std::size_t end, unsigned) {
    for (std::size_t j = begin; j < end; ++j) {
      const auto trees = enumerate_trees(model, model.state(j), options.tree_cap);
      double p = 0.0;
      for (const FragTree& tree : trees) {
        const TreeLawTerm term = tree_law(model, tree, t);
        p += term.value;
        if (term.degenerate) ++degenerate_counts[j];
      }
      report.probabilities[j] = p;
      tree_counts[j] = trees.size();
    }
  });
  for (std::size_t j = 0; j < model.size(); ++j) {
    report.diagnostics.tree_count += tree_counts[j];
    report.diagnostics.degenerate_trees += degenerate_counts[j];
  }
  return report;
}

LawReport semigroup_distribution(const ProcessModel& model, double t) {
  require_time(t);
  LawReport report;
  report.t = t;
  report.method = LawMethod::semigroup;
  UniformizationStats stats;
  report.probabilities = semigroup_row(model, ProcessModel::start(), t, &stats);
  report.diagnostics.uniformization_steps = stats.steps;
  report.diagnostics.uniformization_terms = stats.terms;
  report.diagnostics.truncation_bound = stats.truncation_bound;
  return report;
}

namespace {

template <typename Visit>
std::size_t run_path(const ProcessModel& model, double t, SplitMix64& rng, Visit&& on_jump) {
  std::size_t state = ProcessModel::start();
  double now = 0.0;
  for (;;) {
    const double exit = model.exit_rate(state);
    if (exit <= 0.0) break;
    now += rng.exponential(exit);
    if (now > t) break;
    double pick = rng.uniform_open0() * exit;
    const auto row = model.transitions(state);
    std::size_t next = row.back().target;
    for (const Transition& tr : row) {
      if (pick <= tr.rate) {
        next = tr.target;
        break;
      }
      pick -= tr.rate;
    }
    state = next;
    on_jump(now, state);
  }
  return state;
}

}  // namespace

Trajectory simulate_one(const ProcessModel& model, double t, std::uint64_t seed,
                        std::uint64_t replicate) {
  require_time(t);
  Trajectory path;
  path.horizon = t;
  path.states.push_back(ProcessModel::start());
  SplitMix64 rng = replicate_stream(seed, replicate);
  run_path(model, t, rng, [&](double when, std::size_t state) {
    path.jump_times.push_back(when);
    path.states.push_back(state);
  });
  return path;
}

SimulationResult simulate(const ProcessModel& model, double t, std::size_t n, std::uint64_t seed,
                          const SimulationOptions& options) {
  require_time(t);
  if (n == 0) throw ValidationError("replicate count must be >= 1");
  SimulationResult result;
  if (options.keep_trajectories) result.trajectories.resize(n);
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(options.threads, n));
  std::vector<std::vector<std::size_t>> counts(workers, std::vector<std::size_t>(model.size(), 0));
  parallel_chunks(n, options.threads, [&](std::size_t begin, std::size_t end, unsigned worker) {
    auto& local = counts[worker];
    for (std::size_t r = begin; r < end; ++r) {
      if (options.keep_trajectories) {
        Trajectory path = simulate_one(model, t, seed, r);
        ++local[path.states.back()];
        result.trajectories[r] = std::move(path);
      } else {
        SplitMix64 rng = replicate_stream(seed, r);
        ++local[run_path(model, t, rng, [](double, std::size_t) {})];
      }
    }
  });
  LawReport& report = result.report;
  report.t = t;
  report.method = LawMethod::montecarlo;
  report.probabilities.assign(model.size(), 0.0);
  report.std_errors.assign(model.size(), 0.0);
  const double total = static_cast<double>(n);
  for (std::size_t j = 0; j < model.size(); ++j) {
    std::size_t c = 0;
    for (const auto& local : counts) c += local[j];
    const double p = static_cast<double>(c) / total;
    report.probabilities[j] = p;
    report.std_errors[j] = std::sqrt(p * (1.0 - p) / total);
  }
  report.diagnostics.replicates = n;
  report.diagnostics.seed = seed;
  return result;
}

FragTree classify_trajectory(const Trajectory& trajectory, const ProcessModel& model) {
  const auto& states = trajectory.states;
  if (states.empty() || states.front() != ProcessModel::start()) {
    throw ValidationError("trajectory must start at the trivial partition");
  }
  if (trajectory.jump_times.size() + 1 != states.size()) {
    throw ValidationError("trajectory: jump times and states disagree in length");
  }
  OrtTree tree;
  // Unsplit atoms of tree nodes -> owning node.
  std::unordered_map<SiteMask, int> owner;
  for (std::size_t k = 0; k + 1 < states.size(); ++k) {
    if (states[k] >= model.size() || states[k + 1] >= model.size() ||
        model.generator(states[k], states[k + 1]) <= 0.0 || states[k] == states[k + 1]) {
      throw ValidationError("trajectory: step " + std::to_string(k) + " is not a fragmentation");
    }
    const SetPartition& src = model.state(states[k]);
    const SetPartition& dst = model.state(states[k + 1]);
    SiteMask atom = 0;
    for (SiteMask a : src.atoms()) {
      if (!dst.has_atom(a)) {
        if (atom != 0) throw ValidationError("trajectory: step splits more than one atom");
        atom = a;
      }
    }
    const SetPartition piece = restrict(dst, atom);
    if (replace_atom(src, atom, piece) != dst) {
      throw ValidationError("trajectory: step " + std::to_string(k) + " is not a fragmentation");
    }
    int node = 0;
    if (k == 0) {
      node = tree.add_root(piece);
    } else {
      auto it = owner.find(atom);
      if (it == owner.end()) throw ConsistencyError("trajectory: split atom has no owner node");
      node = tree.add_child(it->second, atom, piece);
      owner.erase(it);
    }
    for (SiteMask a : piece.atoms()) owner[a] = node;
  }
  return augment_unchecked(tree, model.universe());
}

}  // namespace fragmentor
