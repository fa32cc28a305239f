#include "fragmentor/trees.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <memory>
#include <unordered_map>

namespace fragmentor {

OrtTree OrtTree::from_nodes(std::vector<TreeNode> nodes) {
  OrtTree t;
  t.nodes_ = std::move(nodes);
  for (auto& n : t.nodes_) n.children.clear();
  for (std::size_t i = 1; i < t.nodes_.size(); ++i) {
    const int p = t.nodes_[i].parent;
    if (p >= 0 && static_cast<std::size_t>(p) < t.nodes_.size()) {
      t.nodes_[p].children.push_back(static_cast<int>(i));
    }
  }
  for (auto& n : t.nodes_) {
    std::sort(n.children.begin(), n.children.end(), [&](int a, int b) {
      return lowest_site(t.nodes_[a].atom) < lowest_site(t.nodes_[b].atom);
    });
  }
  return t;
}

int OrtTree::add_root(SetPartition partition) {
  if (!nodes_.empty()) throw ValidationError("tree already has a root");
  TreeNode root;
  root.atom = partition.carrier();
  root.partition = std::move(partition);
  nodes_.push_back(std::move(root));
  return 0;
}

int OrtTree::add_child(int parent, SiteMask atom, SetPartition partition) {
  if (parent < 0 || static_cast<std::size_t>(parent) >= nodes_.size()) {
    throw ValidationError("add_child: unknown parent node");
  }
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(TreeNode{std::move(partition), parent, atom, {}});
  auto& siblings = nodes_[parent].children;
  auto pos = std::upper_bound(siblings.begin(), siblings.end(), id, [&](int a, int b) {
    return lowest_site(nodes_[a].atom) < lowest_site(nodes_[b].atom);
  });
  siblings.insert(pos, id);
  return id;
}

std::vector<std::string> OrtTree::violations(const RateFamily& rho) const {
  std::vector<std::string> out;
  if (nodes_.empty()) return out;
  const auto keys = rho.support();

  // Rooted-tree shape: parents precede children.
  if (nodes_[0].parent != -1) out.push_back("root: the root must not have an incoming edge");
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    const int p = nodes_[i].parent;
    if (p < 0 || static_cast<std::size_t>(p) >= i) {
      out.push_back("rooted tree: node " + std::to_string(i) +
                    " is not connected to the root by a path of earlier nodes");
    }
  }
  if (!out.empty()) return out;

  if (std::find(keys.begin(), keys.end(), nodes_[0].partition) == keys.end()) {
    out.push_back("root: " + nodes_[0].partition.to_string() + " is not a rated partition");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const TreeNode& n = nodes_[i];
    if (n.partition.empty() || n.partition.is_trivial()) {
      out.push_back("nodes: node " + std::to_string(i) + " " + n.partition.to_string() +
                    " is not a nontrivial partition of its carrier");
    }
  }
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    const TreeNode& n = nodes_[i];
    const TreeNode& parent = nodes_[n.parent];
    if (!parent.partition.has_atom(n.atom) || n.partition.carrier() != n.atom) {
      out.push_back("edges: node " + std::to_string(i) + " does not split an atom of its parent");
      continue;
    }
    const bool witnessed = std::any_of(keys.begin(), keys.end(), [&](const SetPartition& eps) {
      return restrict(eps, n.atom) == n.partition;
    });
    if (!witnessed) {
      out.push_back("edges: no rated partition restricts to " + n.partition.to_string() +
                    " on its atom");
    }
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    std::vector<SiteMask> atoms;
    for (std::size_t j = 1; j < nodes_.size(); ++j) {
      if (nodes_[j].parent == static_cast<int>(i)) atoms.push_back(nodes_[j].atom);
    }
    std::sort(atoms.begin(), atoms.end());
    if (std::adjacent_find(atoms.begin(), atoms.end()) != atoms.end()) {
      out.push_back("siblings: two children of node " + std::to_string(i) +
                    " split the same atom");
    }
  }
  return out;
}

FragTree augment_unchecked(const OrtTree& tree, SiteMask universe) {
  FragTree out;
  out.base = tree;
  out.universe = universe;
  if (tree.empty()) {
    out.leaves = SetPartition::trivial(universe);
    return out;
  }
  std::vector<SiteMask> leaves;
  out.leaf_children.resize(tree.size());
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const TreeNode& n = tree.node(i);
    for (SiteMask a : n.partition.atoms()) {
      const bool split = std::any_of(n.children.begin(), n.children.end(),
                                     [&](int c) { return tree.node(c).atom == a; });
      if (!split) {
        out.leaf_children[i].push_back(a);
        leaves.push_back(a);
      }
    }
  }
  out.leaves = SetPartition::from_atoms(std::move(leaves));
  return out;
}

FragTree augment(const OrtTree& tree, const RateFamily& rho) {
  if (!tree.empty() && tree.node(0).partition.carrier() != rho.carrier()) {
    throw OrtViolation("(ORT) root: the root must partition the whole site set");
  }
  auto problems = tree.violations(rho);
  if (!problems.empty()) throw OrtViolation("(ORT) " + problems.front());
  return augment_unchecked(tree, rho.carrier());
}

namespace {

bool edge_kept(EdgeMask erased, int child) { return ((erased >> child) & 1U) == 0; }

}  // namespace

SetPartition erased_leaves(const OrtTree& tree, int anchor, EdgeMask erased) {
  std::vector<SiteMask> leaves;
  std::vector<int> stack{anchor};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    const TreeNode& n = tree.node(i);
    for (SiteMask a : n.partition.atoms()) {
      int split_by = -1;
      for (int c : n.children) {
        if (tree.node(c).atom == a && edge_kept(erased, c)) split_by = c;
      }
      if (split_by >= 0) {
        stack.push_back(split_by);
      } else {
        leaves.push_back(a);
      }
    }
  }
  return SetPartition::from_atoms(std::move(leaves));
}

ErasedTree erase(const FragTree& tree, int anchor, EdgeMask erased) {
  if (tree.degenerate() || anchor < 0 || static_cast<std::size_t>(anchor) >= tree.base.size()) {
    throw ValidationError("erase: anchor is not an original node of the tree");
  }
  ErasedTree out;
  out.anchor = anchor;
  out.erased = erased;
  OrtTree sub;
  sub.add_root(tree.base.node(anchor).partition);
  out.origin_nodes.push_back(anchor);
  // Breadth-first copy; parents are always added before their children.
  for (std::size_t k = 0; k < out.origin_nodes.size(); ++k) {
    const TreeNode& n = tree.base.node(out.origin_nodes[k]);
    for (int c : n.children) {
      if (!edge_kept(erased, c)) continue;
      const TreeNode& child = tree.base.node(c);
      sub.add_child(static_cast<int>(k), child.atom, child.partition);
      out.origin_nodes.push_back(c);
    }
  }
  out.result = augment_unchecked(sub, tree.base.node(anchor).partition.carrier());
  return out;
}

OrtTree strip_branches(const FragTree& tree) { return tree.base; }

namespace {

/// Shared enumeration state: one entry per (carrier, restricted target).
struct Subtree {
  SetPartition node;
  // One option per atom of `node`; null means the atom is a leaf.
  std::vector<std::shared_ptr<const Subtree>> parts;
};
using Options = std::vector<std::shared_ptr<const Subtree>>;

class Enumerator {
 public:
  explicit Enumerator(const RateFamily& rho) : rho_(rho) {}

  std::size_t count(const SetPartition& target) {
    if (target.is_trivial()) return 1;
    if (auto it = counts_.find(target); it != counts_.end()) return it->second;
    std::size_t total = 0;
    for (const SetPartition& beta : splits(target)) {
      std::size_t product = 1;
      for (SiteMask b : beta.atoms()) product = saturating_mul(product, count(restrict(target, b)));
      total = saturating_add(total, product);
    }
    counts_.emplace(target, total);
    return total;
  }

  /// Options for a subtree whose leaves must equal `target` (a partition of its
  /// carrier); a single null option when the carrier stays whole.
  const Options& options(const SetPartition& target) {
    if (auto it = options_.find(target); it != options_.end()) return it->second;
    Options out;
    if (target.is_trivial()) {
      out.push_back(nullptr);
    } else {
      for (const SetPartition& beta : splits(target)) {
        std::vector<const Options*> per_atom;
        for (SiteMask b : beta.atoms()) per_atom.push_back(&options(restrict(target, b)));
        if (std::any_of(per_atom.begin(), per_atom.end(),
                        [](const Options* o) { return o->empty(); })) {
          continue;
        }
        // Odometer over the cartesian product of per-atom options.
        std::vector<std::size_t> pick(per_atom.size(), 0);
        bool more = true;
        while (more) {
          auto node = std::make_shared<Subtree>();
          node->node = beta;
          for (std::size_t k = 0; k < per_atom.size(); ++k) {
            node->parts.push_back((*per_atom[k])[pick[k]]);
          }
          out.push_back(std::move(node));
          more = false;
          for (std::size_t k = per_atom.size(); k-- > 0;) {
            if (++pick[k] < per_atom[k]->size()) {
              more = true;
              break;
            }
            pick[k] = 0;
          }
        }
      }
    }
    return options_.emplace(target, std::move(out)).first->second;
  }

 private:
  static std::size_t saturating_add(std::size_t a, std::size_t b) {
    return a > std::numeric_limits<std::size_t>::max() - b ? std::numeric_limits<std::size_t>::max()
                                                            : a + b;
  }
  static std::size_t saturating_mul(std::size_t a, std::size_t b) {
    if (a == 0 || b == 0) return 0;
    return a > std::numeric_limits<std::size_t>::max() / b ? std::numeric_limits<std::size_t>::max()
                                                           : a * b;
  }

  /// Distinct nontrivial restrictions β of rated partitions to the carrier of
  /// `target` with target finer than or equal to β.
  std::vector<SetPartition> splits(const SetPartition& target) {
    const SiteMask carrier = target.carrier();
    auto it = candidates_.find(carrier);
    if (it == candidates_.end()) {
      std::vector<SetPartition> betas;
      const RateFamily marginal = RateFamily::marginal(rho_, carrier);
      for (const RateEntry& e : marginal.entries()) {
        betas.push_back(e.partition);
      }
      it = candidates_.emplace(carrier, std::move(betas)).first;
    }
    std::vector<SetPartition> out;
    for (const SetPartition& beta : it->second) {
      if (refines(beta, target)) out.push_back(beta);
    }
    return out;
  }

  const RateFamily& rho_;
  std::unordered_map<SetPartition, std::size_t> counts_;
  std::unordered_map<SetPartition, Options> options_;
  std::map<SiteMask, std::vector<SetPartition>> candidates_;
};

void materialize(const Subtree& sub, int parent, SiteMask atom, OrtTree& tree) {
  const int id = parent < 0 ? tree.add_root(sub.node) : tree.add_child(parent, atom, sub.node);
  const auto atoms = sub.node.atoms();
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    if (sub.parts[k]) materialize(*sub.parts[k], id, atoms[k], tree);
  }
}

void serialize(const OrtTree& tree, int i, std::string& out) {
  const TreeNode& n = tree.node(i);
  out += n.partition.to_string();
  out += '(';
  bool first = true;
  for (SiteMask a : n.partition.atoms()) {
    if (!first) out += ',';
    first = false;
    auto c = std::find_if(n.children.begin(), n.children.end(),
                          [&](int c) { return tree.node(c).atom == a; });
    if (c == n.children.end()) {
      out += '*';
    } else {
      serialize(tree, *c, out);
    }
  }
  out += ')';
}

}  // namespace

std::size_t count_trees(const ProcessModel& model, const SetPartition& target) {
  model.index_of(target);
  Enumerator e(model.rates());
  return e.count(target);
}

std::vector<FragTree> enumerate_trees(const ProcessModel& model, const SetPartition& target,
                                      std::size_t cap) {
  model.index_of(target);
  Enumerator e(model.rates());
  const std::size_t n = e.count(target);
  if (n > cap) {
    throw ValidationError("tree count " +
                          (n == std::numeric_limits<std::size_t>::max() ? std::string("(overflow)")
                                                                        : std::to_string(n)) +
                          " exceeds the cap of " + std::to_string(cap) +
                          "; raise --tree-cap or use --method semigroup");
  }
  std::vector<FragTree> out;
  out.reserve(n);
  const SiteMask universe = model.universe();
  for (const auto& option : e.options(target)) {
    OrtTree tree;
    if (option) materialize(*option, -1, universe, tree);
    out.push_back(augment_unchecked(tree, universe));
  }
  std::vector<std::string> keys;
  keys.reserve(out.size());
  for (const FragTree& t : out) keys.push_back(canonical_form(t));
  std::vector<std::size_t> order(out.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  std::vector<FragTree> sorted;
  sorted.reserve(out.size());
  for (std::size_t i : order) sorted.push_back(std::move(out[i]));
  return sorted;
}

std::string canonical_form(const FragTree& tree) {
  if (tree.degenerate()) return SetPartition::trivial(tree.universe).to_string();
  std::string out;
  serialize(tree.base, 0, out);
  return out;
}

}  // namespace fragmentor
