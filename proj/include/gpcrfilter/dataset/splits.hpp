#pragma once

// The three evaluation protocols. Every split takes curated positives, samples
// its own 1:1 negatives and assigns partitions.
//
// Partition sizes for n records: train = floor(0.8 n), val = floor(0.1 n),
// test = the remainder. Within a partitioned group, positives are apportioned
// to every cut point K (train, train+val) as round-half-up of K * P / n, so
// each prefix is label-balanced to within half a record.

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gpcrfilter/dataset/negatives.hpp"
#include "gpcrfilter/dataset/records.hpp"
#include "gpcrfilter/error.hpp"
#include "gpcrfilter/hash.hpp"
#include "gpcrfilter/rng.hpp"

namespace gpcrfilter::dataset {

inline constexpr std::size_t kIntraMinPositives = 10;

struct PartitionSizes {
  std::size_t train = 0, val = 0, test = 0;
};

inline PartitionSizes partition_sizes(std::size_t n) {
  PartitionSizes s;
  s.train = n * 8 / 10;
  s.val = n / 10;
  s.test = n - s.train - s.val;
  return s;
}

// Positives among the first k of n records holding p positives.
inline std::size_t apportion_positives(std::size_t k, std::size_t p, std::size_t n) {
  if (n == 0) return 0;
  const std::size_t whole = k * p / n;
  const std::size_t rem = k * p % n;
  return whole + (2 * rem >= n && rem != 0 ? 1 : 0);
}

namespace detail {

inline void append(SplitManifest& m, const InteractionRecord& r, Partition p) {
  m.records.push_back(r);
  m.assignment.push_back(p);
}

// Label-stratified assignment of `group` into the three partitions using the
// given cut points (cuts[0] = train size, cuts[1] = train + val size).
inline void stratified_assign(SplitManifest& m, std::vector<InteractionRecord> group,
                              std::array<std::size_t, 2> cuts, Rng& rng) {
  std::vector<InteractionRecord> pos, neg;
  for (auto& r : group) (r.label == Label::positive ? pos : neg).push_back(std::move(r));
  rng.shuffle(pos);
  rng.shuffle(neg);
  const std::size_t n = pos.size() + neg.size();
  const std::size_t p1 = apportion_positives(cuts[0], pos.size(), n);
  const std::size_t p2 = apportion_positives(cuts[1], pos.size(), n);
  const std::size_t n1 = cuts[0] - p1;
  const std::size_t n2 = cuts[1] - p2;
  for (std::size_t i = 0; i < pos.size(); ++i)
    append(m, pos[i], i < p1 ? Partition::train : (i < p2 ? Partition::val : Partition::test));
  for (std::size_t i = 0; i < neg.size(); ++i)
    append(m, neg[i], i < n1 ? Partition::train : (i < n2 ? Partition::val : Partition::test));
}

inline void require_positives(const std::vector<InteractionRecord>& records) {
  if (records.empty()) throw InputError("split: no records");
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : records) {
    if (r.label != Label::positive) throw InputError("split: input must contain curated positives only");
    if (!seen.emplace(r.target_id, r.ligand_key).second)
      throw InputError("split: duplicate (target, ligand) pair " + r.target_id + " / " + r.ligand_key);
  }
}

inline std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Samples |positives| negatives from the pool; an empty complement becomes a
// warning and zero negatives.
inline std::vector<InteractionRecord> pool_negatives(const PairIndex& index, const std::vector<int>& targets,
                                                     const std::vector<int>& ligands, std::size_t requested,
                                                     Rng& rng, std::vector<std::string>& warnings,
                                                     const std::string& pool_name) {
  try {
    NegativeSample s = sample_negatives(index, targets, ligands, requested, rng);
    if (!s.warning.empty()) warnings.push_back(pool_name + ": " + s.warning);
    return std::move(s.records);
  } catch (const EmptyComplementError&) {
    if (requested > 0)
      warnings.push_back(pool_name + ": negative pool exhausted: requested " + std::to_string(requested) +
                         ", only 0 available");
    return {};
  }
}

}  // namespace detail

// Label-stratified 80/10/10 over an already labelled record set.
inline SplitManifest stratified_partition(std::vector<InteractionRecord> records, std::uint64_t seed) {
  SplitManifest m;
  m.protocol = Protocol::random;
  m.seed = seed;
  Rng rng(seed);
  const PartitionSizes s = partition_sizes(records.size());
  detail::stratified_assign(m, std::move(records), {s.train, s.train + s.val}, rng);
  return m;
}

inline SplitManifest split_random(const std::vector<InteractionRecord>& positives, std::uint64_t seed) {
  detail::require_positives(positives);
  PairIndex index(positives);
  std::vector<int> targets, ligands;
  for (std::size_t t = 0; t < index.target_count(); ++t) targets.push_back(static_cast<int>(t));
  for (std::size_t l = 0; l < index.ligand_count(); ++l) ligands.push_back(static_cast<int>(l));
  Rng rng(hash_combine(seed, 0x72616e646f6dULL));
  std::vector<std::string> warnings;
  auto negatives = detail::pool_negatives(index, targets, ligands, positives.size(), rng, warnings, "global pool");
  std::vector<InteractionRecord> all = positives;
  all.insert(all.end(), negatives.begin(), negatives.end());
  SplitManifest m = stratified_partition(std::move(all), seed);
  m.protocol = Protocol::random;
  m.warnings = std::move(warnings);
  return m;
}

// Targets with fewer than ten positives go wholly to train (with their
// negatives); every other target is split 80/10/10 on its own records.
inline SplitManifest split_intra_target(const std::vector<InteractionRecord>& positives, std::uint64_t seed) {
  detail::require_positives(positives);
  PairIndex index(positives);
  std::vector<int> all_ligands;
  for (std::size_t l = 0; l < index.ligand_count(); ++l) all_ligands.push_back(static_cast<int>(l));
  std::map<std::string, std::vector<InteractionRecord>> by_target;
  for (const auto& r : positives) by_target[r.target_id].push_back(r);

  SplitManifest m;
  m.protocol = Protocol::intra_target;
  m.seed = seed;
  for (auto& [target, group] : by_target) {
    Rng rng(hash_combine(seed, hash_bytes(target)));
    const std::vector<int> pool{index.find_target(target)};
    auto negatives =
        detail::pool_negatives(index, pool, all_ligands, group.size(), rng, m.warnings, "target " + target);
    const std::size_t npos = group.size();
    group.insert(group.end(), negatives.begin(), negatives.end());
    if (npos < kIntraMinPositives) {
      for (const auto& r : group) detail::append(m, r, Partition::train);
      continue;
    }
    const PartitionSizes s = partition_sizes(group.size());
    detail::stratified_assign(m, std::move(group), {s.train, s.train + s.val}, rng);
  }
  return m;
}

// Number of training targets for a 9:1 target partition of n >= 2 targets.
inline std::size_t inter_train_target_count(std::size_t n) {
  return std::clamp<std::size_t>(n * 9 / 10, 1, n - 1);
}

// Receptor ids are shuffled and partitioned 9:1 by count. Each pool samples
// negatives from its own targets x its own ligands; held-out records are split
// evenly (label-stratified) into val and test.
inline SplitManifest split_inter_target(const std::vector<InteractionRecord>& positives, std::uint64_t seed) {
  detail::require_positives(positives);
  PairIndex index(positives);
  std::vector<std::string> targets;
  for (std::size_t t = 0; t < index.target_count(); ++t) targets.push_back(index.target_name(static_cast<int>(t)));
  if (targets.size() < 2) throw InputError("inter-target split needs at least two targets");
  std::sort(targets.begin(), targets.end());
  Rng rng(seed);
  rng.shuffle(targets);
  const std::size_t n_train = inter_train_target_count(targets.size());
  const std::set<std::string> train_targets(targets.begin(), targets.begin() + static_cast<long>(n_train));

  SplitManifest m;
  m.protocol = Protocol::inter_target;
  m.seed = seed;
  std::vector<InteractionRecord> pools[2];
  std::vector<int> pool_targets[2], pool_ligands[2];
  for (const auto& r : positives) {
    const int which = train_targets.count(r.target_id) ? 0 : 1;
    pools[which].push_back(r);
    pool_targets[which].push_back(index.find_target(r.target_id));
    pool_ligands[which].push_back(index.find_ligand(r.ligand_key));
  }
  static constexpr const char* kPoolNames[2] = {"training pool", "held-out pool"};
  for (int which = 0; which < 2; ++which) {
    Rng pool_rng(hash_combine(seed, static_cast<std::uint64_t>(which + 1)));
    auto negatives = detail::pool_negatives(index, detail::sorted_unique(pool_targets[which]),
                                            detail::sorted_unique(pool_ligands[which]), pools[which].size(),
                                            pool_rng, m.warnings, kPoolNames[which]);
    pools[which].insert(pools[which].end(), negatives.begin(), negatives.end());
  }
  for (const auto& r : pools[0]) detail::append(m, r, Partition::train);
  const std::size_t held = pools[1].size();
  const std::size_t val = held / 2;
  Rng held_rng(hash_combine(seed, 3));
  detail::stratified_assign(m, std::move(pools[1]), {0, val}, held_rng);
  return m;
}

inline SplitManifest split(Protocol protocol, const std::vector<InteractionRecord>& positives,
                           std::uint64_t seed) {
  switch (protocol) {
    case Protocol::random:
      return split_random(positives, seed);
    case Protocol::intra_target:
      return split_intra_target(positives, seed);
    case Protocol::inter_target:
      return split_inter_target(positives, seed);
  }
  throw InvariantError("unknown protocol");
}

}  // namespace gpcrfilter::dataset
