#pragma once

// Canonical deduplication key: a canonical SMILES (constitution only).
//
// Atoms are ranked by iterative refinement of local invariants (element,
// aromaticity, charge, H count, degree, ring membership), each round splitting
// classes by the sorted multiset of (neighbour rank, bond order). Remaining ties
// are broken by individualizing each member of the first tied class in turn and
// keeping the lexicographically smallest serialization. The serialization is a
// depth-first SMILES walk in rank order, components sorted and joined by '.'.

#include <algorithm>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "gpcrfilter/chem/molgraph.hpp"
#include "gpcrfilter/chem/smiles.hpp"

namespace gpcrfilter::chem {

namespace detail {

// rank[i] = number of atoms whose key is strictly smaller.
template <class Key>
std::vector<int> ranks_from_keys(const std::vector<Key>& keys) {
  const int n = static_cast<int>(keys.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return keys[a] < keys[b]; });
  std::vector<int> rank(n, 0);
  for (int k = 1; k < n; ++k)
    rank[order[k]] = (keys[order[k]] == keys[order[k - 1]]) ? rank[order[k - 1]] : k;
  return rank;
}

inline int class_count(const std::vector<int>& rank) {
  std::vector<int> r = rank;
  std::sort(r.begin(), r.end());
  return static_cast<int>(std::unique(r.begin(), r.end()) - r.begin());
}

inline std::vector<int> refine(const MolGraph& g, std::vector<int> rank) {
  const int n = g.atom_count();
  int classes = class_count(rank);
  while (true) {
    using Key = std::pair<int, std::vector<std::pair<int, int>>>;
    std::vector<Key> keys(n);
    for (int i = 0; i < n; ++i) {
      keys[i].first = rank[i];
      for (auto [nb, bi] : g.adjacency[i])
        keys[i].second.emplace_back(rank[nb], static_cast<int>(g.bonds[bi].order));
      std::sort(keys[i].second.begin(), keys[i].second.end());
    }
    std::vector<int> next = ranks_from_keys(keys);
    const int next_classes = class_count(next);
    if (next_classes == classes) return next;
    rank = std::move(next);
    classes = next_classes;
  }
}

inline std::string serialize_ranked(const MolGraph& g, const std::vector<int>& rank) {
  std::vector<char> visited(g.atom_count(), 0);
  std::vector<std::string> parts;
  std::vector<int> by_rank(g.atom_count());
  for (int i = 0; i < g.atom_count(); ++i) by_rank[i] = i;
  std::sort(by_rank.begin(), by_rank.end(), [&](int a, int b) { return rank[a] < rank[b]; });
  for (int a : by_rank) {
    if (visited[a]) continue;
    parts.push_back(write_component(g, a, rank, visited));
  }
  std::sort(parts.begin(), parts.end());
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += '.';
    out += parts[i];
  }
  return out;
}

struct CanonSearch {
  const MolGraph& g;
  std::size_t leaf_budget;
  std::size_t leaves = 0;
  std::string best;
  bool have_best = false;

  void run(const std::vector<int>& rank) {
    if (leaves >= leaf_budget && have_best) return;
    const int n = g.atom_count();
    // First tied class = smallest rank shared by more than one atom.
    std::vector<int> count(n, 0);
    for (int r : rank) ++count[r];
    int tied = -1;
    for (int r = 0; r < n; ++r)
      if (count[r] > 1) {
        tied = r;
        break;
      }
    if (tied < 0) {
      ++leaves;
      std::string s = serialize_ranked(g, rank);
      if (!have_best || s < best) best = std::move(s), have_best = true;
      return;
    }
    for (int i = 0; i < n; ++i) {
      if (rank[i] != tied) continue;
      std::vector<int> split = rank;
      for (int j = 0; j < n; ++j)
        if (split[j] == tied && j != i) split[j] = tied + 1;
      run(refine(g, std::move(split)));
      if (leaves >= leaf_budget) return;
    }
  }
};

}  // namespace detail

// Atom ranks from invariant refinement alone (ties remain tied).
inline std::vector<int> invariant_ranks(const MolGraph& g) {
  using Key = std::tuple<int, int, int, int, int, int>;
  std::vector<Key> keys(g.atom_count());
  for (int i = 0; i < g.atom_count(); ++i) {
    const Atom& a = g.atoms[i];
    keys[i] = {a.info().atomic_number, a.aromatic ? 1 : 0, a.formal_charge, a.total_h(), a.degree,
               a.in_ring ? 1 : 0};
  }
  return detail::refine(g, detail::ranks_from_keys(keys));
}

// Highly symmetric graphs can need many tie-break branches; past this many
// complete labelings the smallest string found so far is returned.
inline constexpr std::size_t kCanonLeafBudget = 20000;

inline std::string canonical_key(const MolGraph& g) {
  if (g.atom_count() == 0) return {};
  detail::CanonSearch search{g, kCanonLeafBudget, 0, {}, false};
  search.run(invariant_ranks(g));
  return search.best;
}

}  // namespace gpcrfilter::chem
