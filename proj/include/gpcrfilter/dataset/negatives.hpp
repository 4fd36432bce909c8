#pragma once

// Negative pairs drawn uniformly without replacement from
// (pool targets x pool ligands) minus every known positive.
//
// When the request is at most half the complement, pairs are drawn by seeded
// rejection sampling over the grid; otherwise the complement is enumerated and
// a prefix of its Fisher-Yates shuffle is taken. Both give the same
// distribution; the grid itself is never materialized in the common case.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "gpcrfilter/dataset/records.hpp"
#include "gpcrfilter/error.hpp"
#include "gpcrfilter/rng.hpp"

namespace gpcrfilter::dataset {

class EmptyComplementError : public InputError {
 public:
  using InputError::InputError;
};

struct NegativeSample {
  std::vector<InteractionRecord> records;
  std::size_t requested = 0;
  std::string warning;  // set iff fewer than requested were available
};

inline NegativeSample sample_negatives(const PairIndex& index, std::span<const int> pool_targets,
                                       std::span<const int> pool_ligands, std::size_t requested, Rng& rng) {
  if (pool_targets.empty() || pool_ligands.empty()) throw InputError("negative sampling: empty pool");
  const std::uint64_t grid = std::uint64_t(pool_targets.size()) * pool_ligands.size();
  std::unordered_set<int> ligand_set(pool_ligands.begin(), pool_ligands.end());
  std::unordered_set<int> target_set(pool_targets.begin(), pool_targets.end());
  std::uint64_t known = 0;
  for (std::uint64_t key : index.positive_pairs()) {
    const int t = static_cast<int>(key >> 32);
    const int l = static_cast<int>(key & 0xffffffffu);
    if (target_set.count(t) && ligand_set.count(l)) ++known;
  }
  const std::uint64_t complement = grid - known;
  if (complement == 0) throw EmptyComplementError("negative sampling: complement of known positives is empty");

  NegativeSample out;
  out.requested = requested;
  const std::size_t count = static_cast<std::size_t>(std::min<std::uint64_t>(requested, complement));
  if (count < requested) {
    out.warning = "negative pool exhausted: requested " + std::to_string(requested) + ", only " +
                  std::to_string(count) + " available";
  }
  auto make = [&](int t, int l) {
    return InteractionRecord{index.target_name(t), index.ligand_key(l), index.ligand_smiles(l), Label::negative};
  };

  if (std::uint64_t(count) * 2 <= complement) {
    std::unordered_set<std::uint64_t> chosen;
    out.records.reserve(count);
    while (out.records.size() < count) {
      const int t = pool_targets[rng.below(pool_targets.size())];
      const int l = pool_ligands[rng.below(pool_ligands.size())];
      if (index.is_positive(t, l)) continue;
      if (!chosen.insert(PairIndex::pair_key(t, l)).second) continue;
      out.records.push_back(make(t, l));
    }
    return out;
  }
  std::vector<std::pair<int, int>> all;
  all.reserve(static_cast<std::size_t>(complement));
  for (int t : pool_targets)
    for (int l : pool_ligands)
      if (!index.is_positive(t, l)) all.emplace_back(t, l);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + rng.below(all.size() - i);
    std::swap(all[i], all[j]);
    out.records.push_back(make(all[i].first, all[i].second));
  }
  return out;
}

// Convenience form: pools and known positives derived from the given records,
// count = round(ratio * |positives|).
inline NegativeSample sample_negatives(const std::vector<InteractionRecord>& positives,
                                       const std::vector<std::string>& pool_targets,
                                       const std::vector<std::string>& pool_ligands, double ratio,
                                       std::uint64_t seed) {
  PairIndex index(positives);
  std::vector<int> targets, ligands;
  for (const auto& t : pool_targets) targets.push_back(index.target(t));
  for (const auto& l : pool_ligands) ligands.push_back(index.ligand(l, l));
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  std::sort(ligands.begin(), ligands.end());
  ligands.erase(std::unique(ligands.begin(), ligands.end()), ligands.end());
  Rng rng(seed);
  const auto requested = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(positives.size())));
  return sample_negatives(index, targets, ligands, requested, rng);
}

}  // namespace gpcrfilter::dataset
