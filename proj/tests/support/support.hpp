#pragma once

// Shared fixtures and independent oracles for the test programs. Nothing here
// calls into the code paths it is used to check.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "fragmentor/matrix.hpp"
#include "fragmentor/partitions.hpp"
#include "fragmentor/process.hpp"
#include "fragmentor/recomb.hpp"

namespace testkit {

using namespace fragmentor;

inline SiteMask mask(std::initializer_list<int> sites) {
  SiteMask m = 0;
  for (int s : sites) m |= site_bit(s);
  return m;
}

/// Partition from 0-based site lists.
inline SetPartition part(std::initializer_list<std::initializer_list<int>> atoms) {
  std::vector<SiteMask> out;
  for (auto a : atoms) out.push_back(mask(a));
  return SetPartition::from_atoms(out);
}

/// Seven-site rates on sites 1..7 (indices 0..6), all equal to 1.
inline RateFamily seven_site_rates() {
  const SetPartition g1 = part({{0, 5, 6}, {1, 2, 3}, {4}});
  const SetPartition g2 = part({{0}, {1, 2}, {3, 4}, {5, 6}});
  const SetPartition g3 = part({{0, 1, 2, 3}, {4}, {5}, {6}});
  return RateFamily::create(first_sites(7), {{g1, 1.0}, {g2, 1.0}, {g3, 1.0}});
}

/// The 3-site instance with a = ρ({{1},{2,3}}) and b = ρ(finest).
inline RateFamily three_site_rates(double a = 1.0, double b = 2.0) {
  return RateFamily::create(first_sites(3), {{part({{0}, {1, 2}}), a}, {part({{0}, {1}, {2}}), b}});
}

inline RateFamily two_site_rates(double r = 1.0) {
  return RateFamily::create(first_sites(2), {{part({{0}, {1}}), r}});
}

/// Uniform-ish random set partition of `carrier` via a restricted growth string.
inline SetPartition random_partition(std::mt19937_64& rng, SiteMask carrier) {
  std::vector<SiteMask> blocks;
  for (SiteMask m = carrier; m != 0; m &= m - 1) {
    const SiteMask bit = m & (~m + 1);
    std::uniform_int_distribution<std::size_t> pick(0, blocks.size());
    const std::size_t b = pick(rng);
    if (b == blocks.size()) {
      blocks.push_back(bit);
    } else {
      blocks[b] |= bit;
    }
  }
  return SetPartition::from_atoms(blocks);
}

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

/// Random rate family: n sites in [n_lo, n_hi], 1..k_hi distinct nontrivial
/// keys, rates log-uniform in [0.1, 10].
inline RateFamily random_rates(std::mt19937_64& rng, int n_lo, int n_hi, int k_hi) {
  std::uniform_int_distribution<int> nd(n_lo, n_hi);
  const int n = nd(rng);
  std::uniform_int_distribution<int> kd(1, k_hi);
  const int k = kd(rng);
  const SiteMask universe = first_sites(n);
  std::set<SetPartition> keys;
  for (int tries = 0; static_cast<int>(keys.size()) < k && tries < 200; ++tries) {
    SetPartition p = random_partition(rng, universe);
    if (!p.is_trivial()) keys.insert(p);
  }
  std::vector<RateEntry> entries;
  for (const SetPartition& p : keys) entries.push_back({p, log_uniform(rng, 0.1, 10.0)});
  return RateFamily::create(universe, entries);
}

/// Random probability measure on the given alphabet.
inline Measure random_measure(std::mt19937_64& rng, const AlphabetSpec& spec) {
  std::vector<double> w(spec.states());
  std::exponential_distribution<double> e(1.0);
  double s = 0.0;
  for (double& x : w) s += (x = e(rng));
  for (double& x : w) x /= s;
  return Measure(spec, w);
}

inline AlphabetSpec random_alphabet(std::mt19937_64& rng, SiteMask carrier, int max_size = 3) {
  std::uniform_int_distribution<int> d(2, max_size);
  std::vector<int> sizes;
  for (int i = 0; i < site_count(carrier); ++i) sizes.push_back(d(rng));
  return AlphabetSpec::create(carrier, sizes);
}

// ---------------------------------------------------------------------------
// Brute-force oracles

/// Restriction by definition: {L ∩ J ≠ ∅}.
inline std::vector<SiteMask> brute_restrict(const SetPartition& p, SiteMask j) {
  std::vector<SiteMask> out;
  for (SiteMask a : p.atoms()) {
    if (a & j) out.push_back(a & j);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<SiteMask> sorted_atoms(const SetPartition& p) {
  std::vector<SiteMask> a(p.atoms().begin(), p.atoms().end());
  std::sort(a.begin(), a.end());
  return a;
}

/// Closure and generator straight from the definition, keyed by sorted atom
/// lists: Q[from][to] accumulates ρ_γ over every (atom, γ) producing `to`.
struct BruteChain {
  std::map<std::vector<SiteMask>, std::map<std::vector<SiteMask>, double>> q;
};

inline BruteChain brute_chain(const RateFamily& rho) {
  BruteChain chain;
  std::vector<std::vector<SiteMask>> work{{rho.carrier()}};
  std::set<std::vector<SiteMask>> seen{work.front()};
  while (!work.empty()) {
    const std::vector<SiteMask> cur = work.back();
    work.pop_back();
    auto& row = chain.q[cur];
    for (std::size_t i = 0; i < cur.size(); ++i) {
      for (const RateEntry& e : rho.entries()) {
        const auto pieces = brute_restrict(e.partition, cur[i]);
        if (pieces.size() < 2) continue;
        std::vector<SiteMask> next;
        for (std::size_t j = 0; j < cur.size(); ++j) {
          if (j != i) next.push_back(cur[j]);
        }
        next.insert(next.end(), pieces.begin(), pieces.end());
        std::sort(next.begin(), next.end());
        row[next] += e.rate;
        if (seen.insert(next).second) work.push_back(next);
      }
    }
  }
  return chain;
}

/// Dense generator of `model` rebuilt from the brute-force chain, in the
/// model's state order.
inline Matrix brute_generator(const ProcessModel& model) {
  const BruteChain chain = brute_chain(model.rates());
  Matrix q(model.size(), model.size());
  for (const auto& [from, row] : chain.q) {
    const std::size_t i = model.index_of(SetPartition::from_atoms(from));
    for (const auto& [to, rate] : row) {
      const std::size_t j = model.index_of(SetPartition::from_atoms(to));
      q(i, j) += rate;
      q(i, i) -= rate;
    }
  }
  return q;
}

inline Matrix multiply(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double x = a(i, k);
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += x * b(k, j);
    }
  }
  return c;
}

/// exp(tQ) by scaling and squaring with a degree-24 Taylor polynomial.
inline Matrix expm(const Matrix& q, double t) {
  const std::size_t n = q.rows();
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) row += std::abs(q(i, j));
    norm = std::max(norm, row);
  }
  int squarings = 0;
  double scale = t;
  while (norm * scale > 0.25) {
    scale /= 2.0;
    ++squarings;
  }
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) a(i, j) = q(i, j) * scale;
  }
  Matrix result = Matrix::identity(n);
  Matrix term = Matrix::identity(n);
  for (int k = 1; k <= 24; ++k) {
    term = multiply(term, a);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) term(i, j) /= static_cast<double>(k);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) result(i, j) += term(i, j);
    }
  }
  for (int s = 0; s < squarings; ++s) result = multiply(result, result);
  return result;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Marginal by definition: loop over every joint index and decode it.
inline std::vector<double> brute_marginal(const Measure& mu, SiteMask subset) {
  const auto& spec = mu.spec();
  std::vector<int> sites;
  for (SiteMask m = spec.carrier; m != 0; m &= m - 1) sites.push_back(lowest_site(m));
  std::size_t out_size = 1;
  for (std::size_t k = 0; k < sites.size(); ++k) {
    if (subset & site_bit(sites[k])) out_size *= static_cast<std::size_t>(spec.sizes[k]);
  }
  std::vector<double> out(out_size, 0.0);
  for (std::size_t flat = 0; flat < mu.weights().size(); ++flat) {
    std::vector<int> digits(sites.size());
    std::size_t rest = flat;
    for (std::size_t k = sites.size(); k-- > 0;) {
      digits[k] = static_cast<int>(rest % static_cast<std::size_t>(spec.sizes[k]));
      rest /= static_cast<std::size_t>(spec.sizes[k]);
    }
    std::size_t pos = 0;
    for (std::size_t k = 0; k < sites.size(); ++k) {
      if (subset & site_bit(sites[k])) pos = pos * static_cast<std::size_t>(spec.sizes[k]) + static_cast<std::size_t>(digits[k]);
    }
    out[pos] += mu.weights()[flat];
  }
  return out;
}

}  // namespace testkit
