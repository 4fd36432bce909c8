#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gpcrfilter/chem/elements.hpp"

namespace gpcrfilter::chem {

enum class BondOrder : std::uint8_t { single = 1, double_ = 2, triple = 3, aromatic = 4 };

// Contribution to the valence sum; aromatic bonds count 1 and the aromatic atom
// gets one extra unit (see implicit_hydrogens).
inline int valence_contribution(BondOrder o) {
  return o == BondOrder::aromatic ? 1 : static_cast<int>(o);
}

struct Atom {
  int element = 3;  // index into kElements
  int formal_charge = 0;
  bool aromatic = false;
  bool bracket = false;    // written as [..] in the source
  int explicit_h = 0;      // H count given inside brackets (or folded [H] atoms)
  int implicit_h = 0;      // inferred for organic-subset atoms
  int degree = 0;          // heavy-atom neighbours after H suppression
  bool in_ring = false;
  std::size_t source_offset = 0;

  int total_h() const { return explicit_h + implicit_h; }
  const ElementInfo& info() const { return kElements[element]; }
};

struct Bond {
  int a = 0;
  int b = 0;
  BondOrder order = BondOrder::single;
  bool in_ring = false;

  int other(int atom) const { return atom == a ? b : a; }
};

inline constexpr int kAtomFeatureWidth = 64;

struct MolGraph {
  std::vector<Atom> atoms;
  std::vector<Bond> bonds;
  // Row-major |V| x kAtomFeatureWidth, filled by featurize().
  std::vector<float> features;
  std::string source_smiles;
  // Per atom: (neighbour atom, bond index), in bond insertion order.
  std::vector<std::vector<std::pair<int, int>>> adjacency;

  int atom_count() const { return static_cast<int>(atoms.size()); }
  int bond_count() const { return static_cast<int>(bonds.size()); }

  void rebuild_adjacency() {
    adjacency.assign(atoms.size(), {});
    for (int i = 0; i < bond_count(); ++i) {
      adjacency[bonds[i].a].emplace_back(bonds[i].b, i);
      adjacency[bonds[i].b].emplace_back(bonds[i].a, i);
    }
    for (std::size_t i = 0; i < atoms.size(); ++i)
      atoms[i].degree = static_cast<int>(adjacency[i].size());
  }

  int component_count() const {
    std::vector<int> seen(atoms.size(), 0);
    int components = 0;
    std::vector<int> stack;
    for (int s = 0; s < atom_count(); ++s) {
      if (seen[s]) continue;
      ++components;
      stack.push_back(s);
      seen[s] = 1;
      while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (auto [n, _] : adjacency[v])
          if (!seen[n]) seen[n] = 1, stack.push_back(n);
      }
    }
    return components;
  }
};

// Lowest allowed valence >= the bond sum, minus the bond sum. Aromatic atoms
// only consider their lowest valence and get one extra unit for the pi system.
inline int implicit_hydrogens(const Atom& atom, int bond_valence_sum) {
  const ElementInfo& info = atom.info();
  if (!info.organic_subset) return 0;
  int used = bond_valence_sum;
  if (atom.aromatic) {
    used += 1;
    return info.valences[0] >= used ? info.valences[0] - used : 0;
  }
  for (int i = 0; i < info.valence_count; ++i)
    if (info.valences[i] >= used) return info.valences[i] - used;
  return 0;
}

inline int bond_valence_sum(const MolGraph& g, int atom) {
  int sum = 0;
  for (auto [_, bi] : g.adjacency[atom]) sum += valence_contribution(g.bonds[bi].order);
  return sum;
}

}  // namespace gpcrfilter::chem
