#pragma once

#include <bit>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fragmentor {

/// Set of site indices packed in a machine word; bit i is site i.
using SiteMask = std::uint64_t;

inline constexpr int kMaxSites = 64;

constexpr SiteMask site_bit(int i) { return SiteMask{1} << i; }
constexpr int lowest_site(SiteMask m) { return std::countr_zero(m); }
constexpr int site_count(SiteMask m) { return std::popcount(m); }
constexpr SiteMask first_sites(int n) {
  return n >= kMaxSites ? ~SiteMask{0} : site_bit(n) - 1;
}

/// Ordered, distinct external site labels mapped onto indices 0..n-1.
class SiteSet {
 public:
  SiteSet() = default;
  explicit SiteSet(std::vector<std::string> labels);

  int size() const { return static_cast<int>(labels_.size()); }
  SiteMask universe() const { return first_sites(size()); }
  const std::string& label(int index) const { return labels_.at(index); }
  const std::vector<std::string>& labels() const { return labels_; }
  /// Index of a label; throws ValidationError for unknown labels.
  int index_of(const std::string& label) const;

  bool operator==(const SiteSet&) const = default;

 private:
  std::vector<std::string> labels_;
};

/// A partition of a carrier set of sites, held in canonical form: atoms sorted
/// by their lowest site. Two partitions are equal iff their canonical forms are.
class SetPartition {
 public:
  SetPartition() = default;

  /// Builds a canonical partition from arbitrary atom order. Throws
  /// ValidationError on empty or overlapping atoms.
  static SetPartition from_atoms(std::vector<SiteMask> atoms);
  static SetPartition trivial(SiteMask carrier);
  static SetPartition finest(SiteMask carrier);

  std::span<const SiteMask> atoms() const { return atoms_; }
  SiteMask carrier() const { return carrier_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  bool is_trivial() const { return atoms_.size() == 1; }
  bool has_atom(SiteMask atom) const;
  /// The atom containing `site`, or 0 when the site is outside the carrier.
  SiteMask atom_of(int site) const;

  /// Debug form using 0-based site indices, e.g. {{0,5,6},{1,2,3},{4}}.
  std::string to_string() const;

  friend bool operator==(const SetPartition&, const SetPartition&) = default;
  friend std::strong_ordering operator<=>(const SetPartition& a, const SetPartition& b) {
    return a.atoms_ <=> b.atoms_;
  }

 private:
  explicit SetPartition(std::vector<SiteMask> canonical_atoms);

  std::vector<SiteMask> atoms_;
  SiteMask carrier_ = 0;
};

struct SetPartitionHash {
  std::size_t operator()(const SetPartition& p) const noexcept;
};

/// Common refinement {L ∩ L'} of two partitions of the same carrier.
SetPartition join(const SetPartition& p, const SetPartition& q);

/// True iff q is finer than or equal to p (every atom of q lies inside an atom of p).
bool refines(const SetPartition& p, const SetPartition& q);

/// Partition induced on `subset`; the subset must be a nonempty part of the carrier.
SetPartition restrict(const SetPartition& p, SiteMask subset);

/// One-atom fragmentation δ ⤳ δ': `atom` of `source` replaced by γ|atom for
/// every γ in `witnesses`.
struct FragStep {
  SetPartition source;
  SetPartition target;
  SiteMask atom = 0;
  std::vector<SetPartition> witnesses;
};

/// All non-identity fragmentations of `p` by the family `family`, one entry per
/// distinct target, ordered by target.
std::vector<FragStep> fragmentations(const SetPartition& p,
                                     std::span<const SetPartition> family);

/// Replaces `atom` of `p` by the atoms of `piece` (a partition of `atom`).
SetPartition replace_atom(const SetPartition& p, SiteMask atom, const SetPartition& piece);

}  // namespace fragmentor

template <>
struct std::hash<fragmentor::SetPartition> : fragmentor::SetPartitionHash {};
