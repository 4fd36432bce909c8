#pragma once

// Atom feature layout (kAtomFeatureWidth = 64 columns):
//
//   cols  0-15  element one-hot, kElements order
//   cols 16-22  heavy degree one-hot 0..6 (6 = six or more)
//   cols 23-27  formal charge bucket: <=-2, -1, 0, +1, >=+2
//   col  28     aromatic
//   col  29     in ring
//   cols 30-34  attached hydrogen count one-hot 0..4 (4 = four or more)
//   cols 35-40  on a simple ring of size 3, 4, 5, 6, 7, 8
//   cols 41-47  bond valence sum one-hot 0..6 (aromatic bonds count 1.5, rounded down)
//   cols 48-51  incident single / double / triple / aromatic bond counts
//   cols 52-56  heteroatom (not C, not H) neighbour count one-hot 0..4
//   col  57     atomic mass / 100
//   col  58     halogen
//   col  59     H-bond donor: N or O with at least one H
//   col  60     H-bond acceptor: N or O with formal charge <= 0
//   col  61     heteroatom
//   col  62     charged
//   col  63     constant 1

#include <algorithm>
#include <span>
#include <vector>

#include "gpcrfilter/chem/molgraph.hpp"
#include "gpcrfilter/chem/rings.hpp"

namespace gpcrfilter::chem {

namespace detail {

inline void atom_feature_row(const MolGraph& g, int i, std::span<float> row) {
  std::fill(row.begin(), row.end(), 0.0f);
  const Atom& a = g.atoms[i];
  const ElementInfo& info = a.info();
  row[a.element] = 1.0f;
  row[16 + std::min(a.degree, 6)] = 1.0f;
  const int bucket = std::clamp(a.formal_charge, -2, 2) + 2;
  row[23 + bucket] = 1.0f;
  row[28] = a.aromatic ? 1.0f : 0.0f;
  row[29] = a.in_ring ? 1.0f : 0.0f;
  row[30 + std::min(a.total_h(), 4)] = 1.0f;
  const auto rings = ring_size_membership(g, i);
  for (int k = 0; k < 6; ++k) row[35 + k] = rings[k] ? 1.0f : 0.0f;

  int twice_valence = 0;
  int counts[4] = {0, 0, 0, 0};
  int hetero_neighbours = 0;
  for (auto [nb, bi] : g.adjacency[i]) {
    const BondOrder o = g.bonds[bi].order;
    twice_valence += o == BondOrder::aromatic ? 3 : 2 * static_cast<int>(o);
    counts[static_cast<int>(o) - 1] += 1;
    const int z = g.atoms[nb].info().atomic_number;
    if (z != 6 && z != 1) ++hetero_neighbours;
  }
  row[41 + std::min(twice_valence / 2, 6)] = 1.0f;
  for (int k = 0; k < 4; ++k) row[48 + k] = static_cast<float>(counts[k]);
  row[52 + std::min(hetero_neighbours, 4)] = 1.0f;
  row[57] = static_cast<float>(info.mass / 100.0);
  const int z = info.atomic_number;
  const bool halogen = z == 9 || z == 17 || z == 35 || z == 53;
  const bool n_or_o = z == 7 || z == 8;
  row[58] = halogen ? 1.0f : 0.0f;
  row[59] = (n_or_o && a.total_h() > 0) ? 1.0f : 0.0f;
  row[60] = (n_or_o && a.formal_charge <= 0) ? 1.0f : 0.0f;
  row[61] = (z != 6 && z != 1) ? 1.0f : 0.0f;
  row[62] = a.formal_charge != 0 ? 1.0f : 0.0f;
  row[63] = 1.0f;
}

}  // namespace detail

// |V| x 64 row-major feature matrix. Each row depends only on the atom and its
// local neighbourhood, so atom reordering permutes rows.
inline std::vector<float> featurize(const MolGraph& g) {
  std::vector<float> out(static_cast<std::size_t>(g.atom_count()) * kAtomFeatureWidth, 0.0f);
  for (int i = 0; i < g.atom_count(); ++i)
    detail::atom_feature_row(
        g, i, std::span<float>(out).subspan(static_cast<std::size_t>(i) * kAtomFeatureWidth,
                                            kAtomFeatureWidth));
  return out;
}

inline MolGraph& featurize_in_place(MolGraph& g) {
  g.features = featurize(g);
  return g;
}

}  // namespace gpcrfilter::chem
