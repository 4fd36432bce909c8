#pragma once

// Crystallographic pockets and attention hit counting.

#include <algorithm>
#include <numeric>
#include <optional>
#include <set>
#include <vector>

#include "gpcrfilter/error.hpp"
#include "gpcrfilter/interpret/pdb.hpp"

namespace gpcrfilter::interpret {

inline constexpr double kPocketCutoff = 5.0;  // angstrom
inline constexpr int kDefaultTopK = 20;

// Indices (into chain.residues) of residues whose closest heavy atom lies
// strictly closer than `cutoff` to some ligand heavy atom.
inline std::vector<int> pocket_residues(const PdbChain& chain, const std::vector<Point3>& ligand,
                                        double cutoff = kPocketCutoff) {
  const double c2 = cutoff * cutoff;
  std::vector<int> out;
  for (std::size_t r = 0; r < chain.residues.size(); ++r) {
    bool near = false;
    for (const auto& a : chain.residues[r].atoms) {
      for (const auto& l : ligand)
        if (squared_distance(a.position, l) < c2) {
          near = true;
          break;
        }
      if (near) break;
    }
    if (near) out.push_back(static_cast<int>(r));
  }
  return out;
}

// Residue indices ordered by (score desc, index asc).
inline std::vector<int> rank_residues(const std::vector<double>& scores) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) { return scores[a] != scores[b] ? scores[a] > scores[b] : a < b; });
  return idx;
}

struct RankedResidue {
  int query_index = 0;   // position in the receptor sequence, 0-based
  int chain_index = -1;  // position in the PDB chain, 0-based
  double score = 0;
  bool in_pocket = false;
};

struct PocketReport {
  int k = kDefaultTopK;
  std::vector<RankedResidue> top;  // at most k mappable residues
  std::vector<int> pocket;         // chain indices
  int hits = 0;
  int mappable = 0;         // receptor positions aligned to a chain residue
  int pocket_mappable = 0;  // pocket residues reachable through the alignment
  double expected_random = 0;       // mean hits for a uniformly random ranking
  std::optional<double> enrichment; // hits / expected_random
};

// `query_to_chain` maps receptor positions to chain residue indices (-1 when
// unaligned). Unaligned positions are skipped when taking the top k.
inline PocketReport pocket_hits(const std::vector<double>& scores, const std::vector<int>& query_to_chain,
                                const std::vector<int>& pocket, int k = kDefaultTopK) {
  if (scores.size() != query_to_chain.size())
    throw InvariantError("pocket_hits: attention length does not match the alignment");
  if (k <= 0) throw InputError("k must be positive");
  PocketReport r;
  r.k = k;
  r.pocket = pocket;
  const std::set<int> pocket_set(pocket.begin(), pocket.end());
  for (int c : query_to_chain) {
    if (c < 0) continue;
    ++r.mappable;
    if (pocket_set.count(c)) ++r.pocket_mappable;
  }
  for (int q : rank_residues(scores)) {
    if (static_cast<int>(r.top.size()) == k) break;
    const int c = query_to_chain[q];
    if (c < 0) continue;
    const bool hit = pocket_set.count(c) != 0;
    r.top.push_back({q, c, scores[q], hit});
    r.hits += hit ? 1 : 0;
  }
  if (r.mappable > 0) {
    r.expected_random = static_cast<double>(std::min(k, r.mappable)) * r.pocket_mappable / r.mappable;
    if (r.expected_random > 0) r.enrichment = r.hits / r.expected_random;
  }
  return r;
}

}  // namespace gpcrfilter::interpret
