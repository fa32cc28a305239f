#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "fragmentor/errors.hpp"
#include "fragmentor/exppoly.hpp"
#include "fragmentor/law.hpp"
#include "fragmentor/semigroup.hpp"
#include "support.hpp"

using namespace fragmentor;
using testkit::part;

namespace {

const FragTree& tree_with_root(const std::vector<FragTree>& trees, const SetPartition& root) {
  for (const FragTree& t : trees) {
    if (!t.degenerate() && t.base.node(0).partition == root) return t;
  }
  throw std::runtime_error("no such tree");
}

}  // namespace

TEST_CASE("exponential polynomials") {
  const ExpPoly e = ExpPoly::exponential(2.0, 3.0, 1e-12);
  CHECK(e(0.5) == doctest::Approx(3.0 * std::exp(-1.0)));
  // ∫_0^s e^{-2u} e^{-2(s-u)} du = s e^{-2s}
  const ExpPoly c = ExpPoly::exponential(2.0, 1.0, 1e-12).convolve_exponential(2.0, 1.0);
  CHECK(c(1.5) == doctest::Approx(1.5 * std::exp(-3.0)));
  // ∫_0^s e^{-u} e^{-3(s-u)} du = (e^{-s} - e^{-3s}) / 2
  const ExpPoly d = ExpPoly::exponential(3.0, 1.0, 1e-12).convolve_exponential(1.0, 1.0);
  CHECK(d(0.7) == doctest::Approx((std::exp(-0.7) - std::exp(-2.1)) / 2.0));
  const ExpPoly p = e * ExpPoly::exponential(1.0, 2.0, 1e-12);
  CHECK(p(0.3) == doctest::Approx(6.0 * std::exp(-0.9)));
}

TEST_CASE("two-site tree laws") {
  const ProcessModel m = closure(testkit::two_site_rates(1.0));
  const auto deg = enumerate_trees(m, m.state(0));
  const auto one = enumerate_trees(m, m.state(1));
  for (double t : {0.0, 0.3, 2.0}) {
    CHECK(tree_law(m, deg[0], t).value == doctest::Approx(std::exp(-t)));
    CHECK(tree_law(m, one[0], t).value == doctest::Approx(1.0 - std::exp(-t)));
  }
  const LawReport r = law_distribution(m, 1.2);
  CHECK(r.probabilities[0] == doctest::Approx(std::exp(-1.2)));
  CHECK(r.probabilities[1] == doctest::Approx(1.0 - std::exp(-1.2)));
  const LawReport s = semigroup_distribution(m, 1.2);
  CHECK(testkit::max_abs_diff(r.probabilities, s.probabilities) < 1e-12);
}

TEST_CASE("three-site tree laws match the hand-derived integrals") {
  for (auto [a, b] : {std::pair{1.0, 2.0}, std::pair{0.3, 4.0}, std::pair{2.5, 0.7}}) {
    const ProcessModel m = closure(testkit::three_site_rates(a, b));
    const SetPartition finest = part({{0}, {1}, {2}});
    const auto trees = enumerate_trees(m, finest);
    REQUIRE(trees.size() == 2);
    const FragTree& direct = tree_with_root(trees, finest);
    const FragTree& nested = tree_with_root(trees, part({{0}, {1, 2}}));
    for (double t : {0.1, 1.0, 5.0}) {
      const double e = std::exp(-(a + b) * t);
      CHECK(tree_law(m, direct, t).value == doctest::Approx(b / (a + b) * (1.0 - e)));
      CHECK(tree_law(m, nested, t).value ==
            doctest::Approx(a / (a + b) * (1.0 - e) - std::exp(-b * t) * (1.0 - std::exp(-a * t))));
      const double sum = tree_law(m, direct, t).value + tree_law(m, nested, t).value;
      CHECK(std::abs(sum - semigroup_row(m, 0, t)[m.index_of(finest)]) < 1e-9);
    }
  }
}

TEST_CASE("tree law at t = 0") {
  const ProcessModel m = closure(testkit::seven_site_rates());
  for (const SetPartition& s : m.states()) {
    for (const FragTree& t : enumerate_trees(m, s)) {
      CHECK(tree_law(m, t, 0.0).value == doctest::Approx(t.degenerate() ? 1.0 : 0.0));
    }
  }
  CHECK_THROWS_AS(tree_law(m, enumerate_trees(m, m.state(0))[0], -1.0), ValidationError);
}

TEST_CASE("degenerate rates fall back to the exact recursion") {
  const ProcessModel m = closure(testkit::seven_site_rates());
  for (double t : {0.2, 1.0, 4.0}) {
    const LawReport f = law_distribution(m, t);
    const LawReport s = semigroup_distribution(m, t);
    CHECK(f.diagnostics.degenerate_trees > 0);
    CHECK(testkit::max_abs_diff(f.probabilities, s.probabilities) < 1e-10);
  }
}

TEST_CASE("closed form and recursion agree on generic instances") {
  std::mt19937_64 rng(41);
  int compared = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const RateFamily rho = testkit::random_rates(rng, 2, 5, 3);
    const ProcessModel m = closure(rho);
    if (!check_generic_rates(m).passed) continue;
    for (const SetPartition& s : m.states()) {
      for (const FragTree& t : enumerate_trees(m, s)) {
        const ExpPoly f = tree_law_recursive(rho, t);
        for (double x : {0.3, 2.0}) {
          const auto closed = tree_law_closed_form(rho, t, x);
          REQUIRE(closed.has_value());
          CHECK(std::abs(*closed - f(x)) < 1e-9);
          ++compared;
        }
      }
    }
  }
  CHECK(compared > 100);
}

TEST_CASE("formula and semigroup agree; tree terms are bounded by the state law") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 25; ++trial) {
    const RateFamily rho = testkit::random_rates(rng, 2, 4, 3);
    const ProcessModel m = closure(rho);
    for (double t : {0.1, 1.0, 5.0}) {
      const LawReport f = law_distribution(m, t);
      const auto row = semigroup_row(m, 0, t);
      CHECK(testkit::max_abs_diff(f.probabilities, row) < 1e-8);
      double total = 0.0;
      for (double p : f.probabilities) total += p;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-8));
      for (std::size_t j = 0; j < m.size(); ++j) {
        for (const FragTree& tree : enumerate_trees(m, m.state(j))) {
          const double v = tree_law(m, tree, t).value;
          CHECK(v >= -1e-9);
          CHECK(v <= row[j] + 1e-9);
        }
      }
    }
  }
}

TEST_CASE("absorption at large t") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const ProcessModel m = closure(testkit::random_rates(rng, 2, 4, 3));
    double slowest = 1e300;
    for (std::size_t i = 0; i < m.absorbing(); ++i) slowest = std::min(slowest, m.exit_rate(i));
    const double t = 40.0 / slowest;
    CHECK(semigroup_distribution(m, t).probabilities.back() >= 0.99);
    CHECK(law_distribution(m, t).probabilities.back() >= 0.99);
  }
}

TEST_CASE("Monte Carlo: two-site closed form and determinism") {
  const ProcessModel m = closure(testkit::two_site_rates(1.0));
  const SimulationResult r = simulate(m, 1.0, 100000, 7);
  const double p = 1.0 - std::exp(-1.0);
  CHECK(std::abs(r.report.probabilities[1] - p) < 4.0 * r.report.std_errors[1]);
  CHECK(r.report.diagnostics.seed == 7);
  const SimulationResult again = simulate(m, 1.0, 100000, 7, {3, false});
  CHECK(again.report.probabilities == r.report.probabilities);
  const SimulationResult other = simulate(m, 1.0, 100000, 8);
  CHECK(other.report.probabilities != r.report.probabilities);
  CHECK_THROWS_AS(simulate(m, 1.0, 0, 1), ValidationError);

  const SimulationResult one = simulate(m, 0.0, 1, 3, {1, true});
  REQUIRE(one.trajectories.size() == 1);
  CHECK(one.trajectories[0].jump_times.empty());
  CHECK(one.trajectories[0].states == std::vector<std::size_t>{0});
}

TEST_CASE("trajectories are valid jump chains") {
  const ProcessModel m = closure(testkit::seven_site_rates());
  for (std::uint64_t r = 0; r < 200; ++r) {
    const Trajectory path = simulate_one(m, 2.0, 11, r);
    CHECK(path.states.front() == 0);
    for (std::size_t k = 0; k < path.jump_times.size(); ++k) {
      CHECK(path.jump_times[k] <= 2.0);
      if (k > 0) CHECK(path.jump_times[k] > path.jump_times[k - 1]);
      CHECK(m.generator(path.states[k], path.states[k + 1]) > 0.0);
    }
    const FragTree tree = classify_trajectory(path, m);
    CHECK(tree.leaves == m.state(path.states.back()));
    CHECK(tree.base.violations(m.rates()).empty());
  }
}

TEST_CASE("classify_trajectory") {
  const ProcessModel m = closure(testkit::three_site_rates());
  const Trajectory none{{}, {0}, 1.0};
  CHECK(classify_trajectory(none, m).degenerate());
  const std::size_t finest = m.index_of(part({{0}, {1}, {2}}));
  const Trajectory direct{{0.4}, {0, finest}, 1.0};
  const FragTree t = classify_trajectory(direct, m);
  CHECK(t.base.size() == 1);
  CHECK(t.base.node(0).partition == part({{0}, {1}, {2}}));
  const Trajectory backwards{{0.4}, {finest, 0}, 1.0};
  CHECK_THROWS_AS(classify_trajectory(backwards, m), ValidationError);
  const Trajectory bad_len{{0.4, 0.5}, {0, finest}, 1.0};
  CHECK_THROWS_AS(classify_trajectory(bad_len, m), ValidationError);
}

TEST_CASE("per-tree frequencies match tree laws") {
  const ProcessModel m = closure(testkit::three_site_rates());
  const double t = 0.8;
  const std::size_t n = 40000;
  const SimulationResult sim = simulate(m, t, n, 5, {1, true});
  std::map<std::string, std::size_t> counts;
  for (const Trajectory& p : sim.trajectories) ++counts[canonical_form(classify_trajectory(p, m))];
  for (const SetPartition& s : m.states()) {
    for (const FragTree& tree : enumerate_trees(m, s)) {
      const double expect = tree_law(m, tree, t).value;
      const double freq = static_cast<double>(counts[canonical_form(tree)]) / static_cast<double>(n);
      const double se = std::sqrt(std::max(expect * (1.0 - expect), 1e-12) / static_cast<double>(n));
      CHECK(std::abs(freq - expect) < 4.0 * se);
    }
  }
}

TEST_CASE("law method names") {
  CHECK(parse_law_method("formula") == LawMethod::formula);
  CHECK(parse_law_method("semigroup") == LawMethod::semigroup);
  CHECK(parse_law_method("mc") == LawMethod::montecarlo);
  CHECK(to_string(LawMethod::montecarlo) == "montecarlo");
  CHECK_THROWS_AS(parse_law_method("exact"), ValidationError);
}
