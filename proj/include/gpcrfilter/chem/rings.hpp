#pragma once

#include <algorithm>
#include <array>
#include <vector>

#include "gpcrfilter/chem/molgraph.hpp"

namespace gpcrfilter::chem {

// Marks every bond that lies on a cycle (i.e. is not a bridge) and every atom
// incident to such a bond. Iterative lowlink DFS.
inline void mark_rings(MolGraph& g) {
  const int n = g.atom_count();
  std::vector<int> disc(n, -1), low(n, 0);
  for (auto& b : g.bonds) b.in_ring = false;
  for (auto& a : g.atoms) a.in_ring = false;
  int timer = 0;
  struct Frame {
    int atom;
    int parent_bond;
    std::size_t next;
  };
  std::vector<Frame> stack;
  for (int root = 0; root < n; ++root) {
    if (disc[root] >= 0) continue;
    stack.push_back({root, -1, 0});
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next < g.adjacency[f.atom].size()) {
        auto [nb, bi] = g.adjacency[f.atom][f.next++];
        if (bi == f.parent_bond) continue;
        if (disc[nb] < 0) {
          disc[nb] = low[nb] = timer++;
          stack.push_back({nb, bi, 0});
        } else {
          // Non-tree edges always close a cycle.
          low[f.atom] = std::min(low[f.atom], disc[nb]);
          g.bonds[bi].in_ring = true;
        }
      } else {
        const Frame done = f;
        stack.pop_back();
        if (!stack.empty()) {
          const int parent = stack.back().atom;
          low[parent] = std::min(low[parent], low[done.atom]);
          // Tree edge parent->done is a bridge iff low[done] > disc[parent].
          if (low[done.atom] <= disc[parent]) g.bonds[done.parent_bond].in_ring = true;
        }
      }
    }
  }
  for (const auto& b : g.bonds)
    if (b.in_ring) g.atoms[b.a].in_ring = g.atoms[b.b].in_ring = true;
}

// flags[k-3] is true when the atom lies on a simple cycle of length k, k=3..8.
inline std::array<bool, 6> ring_size_membership(const MolGraph& g, int atom) {
  std::array<bool, 6> flags{};
  if (!g.atoms[atom].in_ring) return flags;
  std::vector<char> on_path(g.atom_count(), 0);
  // Bounded DFS for simple paths returning to `atom`.
  auto dfs = [&](auto&& self, int v, int depth) -> void {
    for (auto [nb, _] : g.adjacency[v]) {
      if (nb == atom && depth >= 3) {
        if (depth <= 8) flags[depth - 3] = true;
        continue;
      }
      if (on_path[nb] || depth >= 8) continue;
      on_path[nb] = 1;
      self(self, nb, depth + 1);
      on_path[nb] = 0;
    }
  };
  on_path[atom] = 1;
  dfs(dfs, atom, 1);
  return flags;
}

}  // namespace gpcrfilter::chem
