#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fragmentor/errors.hpp"
#include "fragmentor/partitions.hpp"
#include "fragmentor/process.hpp"

namespace fragmentor {

/// Node of an original rooted tree. A non-root node is a nontrivial partition
/// of `atom`, which is an atom of its parent's partition.
struct TreeNode {
  SetPartition partition;
  int parent = -1;
  SiteMask atom = 0;
  std::vector<int> children;
};

/// Bit i marks the edge from node i's parent into node i (i ≥ 1).
using EdgeMask = std::uint64_t;

/// Original rooted tree; node 0 is the root δ₀. The empty tree is valid.
class OrtTree {
 public:
  OrtTree() = default;
  /// Wraps nodes as given (node 0 the root); children lists are rebuilt from
  /// parent links. No validation.
  static OrtTree from_nodes(std::vector<TreeNode> nodes);

  int add_root(SetPartition partition);
  int add_child(int parent, SiteMask atom, SetPartition partition);

  bool empty() const { return nodes_.empty(); }
  std::size_t size() const { return nodes_.size(); }
  const TreeNode& node(std::size_t i) const { return nodes_.at(i); }
  std::span<const TreeNode> nodes() const { return nodes_; }
  /// Edges are identified by their child node: 1..size()-1.
  std::size_t edge_count() const { return nodes_.empty() ? 0 : nodes_.size() - 1; }

  /// Human-readable (ORT) violations against `rho`, one per failing bullet.
  std::vector<std::string> violations(const RateFamily& rho) const;

 private:
  std::vector<TreeNode> nodes_;
};

class OrtViolation : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// A fragmentation tree: an (ORT) tree plus leaf branches 𝒩_α and the
/// super-root {I}. Its leaves form a partition of the universe.
struct FragTree {
  OrtTree base;
  SiteMask universe = 0;
  SetPartition leaves;
  /// 𝒩_α per original node: atoms of α not split by any child.
  std::vector<std::vector<SiteMask>> leaf_children;

  bool degenerate() const { return base.empty(); }
};

/// Augments a validated (ORT) tree. Throws OrtViolation naming the failing rule.
FragTree augment(const OrtTree& tree, const RateFamily& rho);

/// Augmentation without re-validation, for trees built by this library.
FragTree augment_unchecked(const OrtTree& tree, SiteMask universe);

struct ErasedTree {
  int anchor = 0;
  EdgeMask erased = 0;
  FragTree result;
  /// result node index -> node index in the origin tree
  std::vector<int> origin_nodes;
};

/// T^I_α(H): the subtree rooted at `anchor` with the edges in `erased` cut and
/// everything cut off dropped, re-augmented over I_α.
ErasedTree erase(const FragTree& tree, int anchor, EdgeMask erased);

/// Leaves ℒ of T_α(H) without materializing the tree.
SetPartition erased_leaves(const OrtTree& tree, int anchor, EdgeMask erased);

inline constexpr std::size_t kDefaultTreeCap = 1000000;

/// |𝔗(target)| without materializing trees (saturates at SIZE_MAX).
std::size_t count_trees(const ProcessModel& model, const SetPartition& target);

/// Every fragmentation tree whose leaves equal `target`, each once, in
/// canonical-serialization order. Throws ValidationError when the count
/// exceeds `cap` or the target is not a state.
std::vector<FragTree> enumerate_trees(const ProcessModel& model, const SetPartition& target,
                                      std::size_t cap = kDefaultTreeCap);

/// Preorder serialization with children ordered by the lowest site of their
/// atom; equal strings iff equal trees.
std::string canonical_form(const FragTree& tree);

/// Reverse of augmentation: the (ORT) tree obtained by dropping branches.
OrtTree strip_branches(const FragTree& tree);

}  // namespace fragmentor
