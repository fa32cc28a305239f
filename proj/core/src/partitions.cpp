#include "fragmentor/partitions.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <unordered_map>

#include "fragmentor/errors.hpp"

namespace fragmentor {

SiteSet::SiteSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw ValidationError("site set must be nonempty");
  if (labels_.size() > static_cast<std::size_t>(kMaxSites)) {
    throw ValidationError("at most 64 sites are supported, got " +
                          std::to_string(labels_.size()));
  }
  std::vector<std::string> sorted = labels_;
  std::sort(sorted.begin(), sorted.end());
  auto dup = std::adjacent_find(sorted.begin(), sorted.end());
  if (dup != sorted.end()) throw ValidationError("duplicate site label '" + *dup + "'");
}

int SiteSet::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw ValidationError("unknown site label '" + label + "'");
  return static_cast<int>(it - labels_.begin());
}

SetPartition::SetPartition(std::vector<SiteMask> canonical_atoms)
    : atoms_(std::move(canonical_atoms)) {
  for (SiteMask a : atoms_) carrier_ |= a;
}

namespace {

void canonicalize(std::vector<SiteMask>& atoms) {
  std::sort(atoms.begin(), atoms.end(),
            [](SiteMask a, SiteMask b) { return lowest_site(a) < lowest_site(b); });
}

}  // namespace

SetPartition SetPartition::from_atoms(std::vector<SiteMask> atoms) {
  SiteMask seen = 0;
  for (SiteMask a : atoms) {
    if (a == 0) throw ValidationError("partition atoms must be nonempty");
    if (seen & a) throw ValidationError("partition atoms must be pairwise disjoint");
    seen |= a;
  }
  canonicalize(atoms);
  return SetPartition(std::move(atoms));
}

SetPartition SetPartition::trivial(SiteMask carrier) {
  if (carrier == 0) throw ValidationError("carrier must be nonempty");
  return SetPartition({carrier});
}

SetPartition SetPartition::finest(SiteMask carrier) {
  if (carrier == 0) throw ValidationError("carrier must be nonempty");
  std::vector<SiteMask> atoms;
  atoms.reserve(site_count(carrier));
  for (SiteMask rest = carrier; rest; rest &= rest - 1) atoms.push_back(rest & -rest);
  return SetPartition(std::move(atoms));
}

bool SetPartition::has_atom(SiteMask atom) const {
  return atom != 0 && atom_of(lowest_site(atom)) == atom;
}

SiteMask SetPartition::atom_of(int site) const {
  const SiteMask bit = site_bit(site);
  for (SiteMask a : atoms_) {
    if (a & bit) return a;
  }
  return 0;
}

std::string SetPartition::to_string() const {
  std::ostringstream out;
  out << '{';
  for (std::size_t k = 0; k < atoms_.size(); ++k) {
    if (k) out << ',';
    out << '{';
    bool first = true;
    for (SiteMask rest = atoms_[k]; rest; rest &= rest - 1) {
      if (!first) out << ',';
      out << lowest_site(rest);
      first = false;
    }
    out << '}';
  }
  out << '}';
  return out.str();
}

std::size_t SetPartitionHash::operator()(const SetPartition& p) const noexcept {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL;
  for (SiteMask a : p.atoms()) {
    h ^= a + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

namespace {

void require_same_carrier(const SetPartition& p, const SetPartition& q, const char* op) {
  if (p.carrier() != q.carrier()) {
    throw ValidationError(std::string(op) + ": partitions have different carriers (" +
                          p.to_string() + " vs " + q.to_string() + ")");
  }
}

}  // namespace

SetPartition join(const SetPartition& p, const SetPartition& q) {
  require_same_carrier(p, q, "join");
  std::vector<SiteMask> atoms;
  atoms.reserve(p.size() + q.size());
  for (SiteMask a : p.atoms()) {
    for (SiteMask b : q.atoms()) {
      if (SiteMask c = a & b) atoms.push_back(c);
    }
  }
  return SetPartition::from_atoms(std::move(atoms));
}

bool refines(const SetPartition& p, const SetPartition& q) {
  require_same_carrier(p, q, "refines");
  for (SiteMask b : q.atoms()) {
    if ((p.atom_of(lowest_site(b)) & b) != b) return false;
  }
  return true;
}

SetPartition restrict(const SetPartition& p, SiteMask subset) {
  if (subset == 0) throw ValidationError("restrict: subset must be nonempty");
  if ((subset & ~p.carrier()) != 0) {
    throw ValidationError("restrict: subset is not contained in the carrier of " +
                          p.to_string());
  }
  std::vector<SiteMask> atoms;
  for (SiteMask a : p.atoms()) {
    if (SiteMask c = a & subset) atoms.push_back(c);
  }
  return SetPartition::from_atoms(std::move(atoms));
}

SetPartition replace_atom(const SetPartition& p, SiteMask atom, const SetPartition& piece) {
  if (!p.has_atom(atom) || piece.carrier() != atom) {
    throw ValidationError("replace_atom: " + piece.to_string() + " is not a partition of an atom of " +
                          p.to_string());
  }
  std::vector<SiteMask> atoms;
  atoms.reserve(p.size() + piece.size());
  for (SiteMask a : p.atoms()) {
    if (a != atom) atoms.push_back(a);
  }
  for (SiteMask a : piece.atoms()) atoms.push_back(a);
  return SetPartition::from_atoms(std::move(atoms));
}

std::vector<FragStep> fragmentations(const SetPartition& p,
                                     std::span<const SetPartition> family) {
  std::map<SetPartition, FragStep> steps;
  for (const SetPartition& gamma : family) {
    if (gamma.carrier() != p.carrier()) {
      throw ValidationError("fragmentations: family member " + gamma.to_string() +
                            " has a different carrier");
    }
    for (SiteMask atom : p.atoms()) {
      SetPartition piece = restrict(gamma, atom);
      if (piece.is_trivial()) continue;
      SetPartition target = replace_atom(p, atom, piece);
      auto [it, inserted] = steps.try_emplace(target);
      if (inserted) {
        it->second.source = p;
        it->second.target = target;
        it->second.atom = atom;
      }
      it->second.witnesses.push_back(gamma);
    }
  }
  std::vector<FragStep> out;
  out.reserve(steps.size());
  for (auto& [target, step] : steps) out.push_back(std::move(step));
  return out;
}

}  // namespace fragmentor
