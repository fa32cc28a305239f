#include <doctest.h>

#include <random>

#include "fragmentor/errors.hpp"
#include "fragmentor/partitions.hpp"
#include "support.hpp"

using namespace fragmentor;
using testkit::mask;
using testkit::part;

namespace {

// seven-site partitions on sites 1..7 stored as indices 0..6.
const SetPartition g1 = part({{0, 5, 6}, {1, 2, 3}, {4}});
const SetPartition g2 = part({{0}, {1, 2}, {3, 4}, {5, 6}});
const SetPartition g3 = part({{0, 1, 2, 3}, {4}, {5}, {6}});
const SiteMask all7 = first_sites(7);

}  // namespace

TEST_CASE("canonical form sorts atoms by lowest site") {
  const SetPartition p = SetPartition::from_atoms({mask({4}), mask({2, 3}), mask({0, 1})});
  CHECK(p.to_string() == "{{0,1},{2,3},{4}}");
  CHECK(SetPartition::from_atoms({p.atoms().begin(), p.atoms().end()}) == p);
  CHECK(p.carrier() == first_sites(5));
  CHECK(p.atom_of(3) == mask({2, 3}));
}

TEST_CASE("invalid atoms are rejected") {
  CHECK_THROWS_AS(SetPartition::from_atoms({mask({0, 1}), mask({1, 2})}), ValidationError);
  CHECK_THROWS_AS(SetPartition::from_atoms({mask({0}), 0}), ValidationError);
  CHECK_THROWS_AS(SiteSet({"a", "b", "a"}), ValidationError);
  CHECK_THROWS_AS(SiteSet(std::vector<std::string>{}), ValidationError);
}

TEST_CASE("join of the seven-site partitions") {
  CHECK(join(g1, g2) == part({{0}, {1, 2}, {3}, {4}, {5, 6}}));
  CHECK(join(g1, join(g2, g3)) == part({{0}, {1, 2}, {3}, {4}, {5}, {6}}));
  CHECK(join(g1, SetPartition::trivial(all7)) == g1);
  CHECK_THROWS_AS(join(g1, SetPartition::trivial(first_sites(3))), ValidationError);
}

TEST_CASE("refinement order") {
  CHECK(refines(SetPartition::trivial(all7), g1));
  CHECK_FALSE(refines(g2, g1));
  CHECK(refines(g1, g1));
  CHECK(refines(g1, join(g1, g2)));
  CHECK_THROWS_AS(refines(g1, SetPartition::trivial(first_sites(2))), ValidationError);
}

TEST_CASE("restriction") {
  CHECK(restrict(g2, mask({0, 5, 6})) == part({{0}, {5, 6}}));
  CHECK(restrict(g1, all7) == g1);
  CHECK(restrict(part({{0, 1}, {2}}), mask({2})) == part({{2}}));
  CHECK_THROWS_AS(restrict(g1, 0), ValidationError);
  CHECK_THROWS_AS(restrict(part({{0, 1}}), mask({2})), ValidationError);
}

TEST_CASE("fragmentations") {
  const std::vector<SetPartition> fam2{g2};
  const auto root = fragmentations(SetPartition::trivial(all7), fam2);
  REQUIRE(root.size() == 1);
  CHECK(root[0].target == g2);
  CHECK(root[0].atom == all7);
  CHECK(root[0].witnesses == fam2);

  const std::vector<SetPartition> fam{g1, g2, g3};
  CHECK(fragmentations(join(g1, join(g2, g3)), fam).empty());

  const auto steps = fragmentations(g1, fam2);
  REQUIRE(steps.size() == 2);
  std::set<SiteMask> atoms{steps[0].atom, steps[1].atom};
  CHECK(atoms == std::set<SiteMask>{mask({0, 5, 6}), mask({1, 2, 3})});
  for (const FragStep& s : steps) {
    CHECK(s.target == replace_atom(g1, s.atom, restrict(g2, s.atom)));
  }
  CHECK(fragmentations(g1, std::vector<SetPartition>{}).empty());
}

TEST_CASE("witnesses are grouped by target") {
  // On carrier {0,1,2}: both keys split {0,1,2} into {{0},{1,2}}.
  const SetPartition a = part({{0}, {1, 2}, {3}});
  const SetPartition b = part({{0, 3}, {1, 2}});
  const std::vector<SetPartition> fam{a, b};
  const auto steps = fragmentations(part({{0, 1, 2}, {3}}), fam);
  REQUIRE(steps.size() == 1);
  CHECK(steps[0].witnesses.size() == 2);
}

TEST_CASE("lattice properties on random partitions") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 400; ++trial) {
    std::uniform_int_distribution<int> nd(1, 7);
    const SiteMask u = first_sites(nd(rng));
    const SetPartition p = testkit::random_partition(rng, u);
    const SetPartition q = testkit::random_partition(rng, u);
    const SetPartition r = testkit::random_partition(rng, u);
    CHECK(join(p, q) == join(q, p));
    CHECK(join(p, join(q, r)) == join(join(p, q), r));
    CHECK(join(p, p) == p);
    CHECK(refines(p, q) == (join(p, q) == q));
    if (refines(p, q) && refines(q, p)) CHECK(p == q);
    if (refines(p, q) && refines(q, r)) CHECK(refines(p, r));
    // join against the definition
    std::vector<SiteMask> meet;
    for (SiteMask a : p.atoms()) {
      for (SiteMask b : q.atoms()) {
        if (a & b) meet.push_back(a & b);
      }
    }
    CHECK(join(p, q) == SetPartition::from_atoms(meet));

    SiteMask j = 0;
    while (j == 0) j = rng() & u;
    CHECK(testkit::sorted_atoms(restrict(p, j)) == testkit::brute_restrict(p, j));
    CHECK(restrict(join(p, q), j) == join(restrict(p, j), restrict(q, j)));

    const std::vector<SetPartition> fam{q, r};
    for (const FragStep& s : fragmentations(p, fam)) {
      CHECK(s.target.size() > s.source.size());
      CHECK(refines(s.source, s.target));
      CHECK(s.source.has_atom(s.atom));
      for (const SetPartition& w : s.witnesses) {
        CHECK(replace_atom(s.source, s.atom, restrict(w, s.atom)) == s.target);
      }
    }
  }
}
