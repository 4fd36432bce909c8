#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "gpcrfilter/dataset/records.hpp"

namespace gpcrfilter::dataset {

struct HistogramBin {
  std::size_t lo = 0, hi = 0;  // inclusive positive-count range, [2^k, 2^(k+1) - 1]
  std::size_t targets = 0;
};

struct TargetFrequency {
  std::string target_id;
  std::size_t count = 0;
};

struct DistributionStats {
  std::map<std::string, std::size_t> positives_per_target;
  std::vector<HistogramBin> histogram;
  std::vector<TargetFrequency> top;  // by count desc, then id asc
  std::size_t distinct_targets = 0;
  std::size_t distinct_ligands = 0;
  std::size_t positives = 0;
};

inline DistributionStats distribution_stats(const std::vector<InteractionRecord>& records, std::size_t top_k = 10) {
  DistributionStats s;
  std::map<std::string, std::size_t> ligands;
  for (const auto& r : records) {
    if (r.label != Label::positive) continue;
    ++s.positives_per_target[r.target_id];
    ++ligands[r.ligand_key];
    ++s.positives;
  }
  s.distinct_targets = s.positives_per_target.size();
  s.distinct_ligands = ligands.size();
  std::size_t max_count = 0;
  for (const auto& [_, c] : s.positives_per_target) max_count = std::max(max_count, c);
  for (std::size_t lo = 1; lo <= max_count; lo *= 2) s.histogram.push_back({lo, 2 * lo - 1, 0});
  for (const auto& [_, c] : s.positives_per_target) {
    std::size_t k = 0;
    while ((std::size_t{2} << k) <= c) ++k;
    ++s.histogram[k].targets;
  }
  for (const auto& [id, c] : s.positives_per_target) s.top.push_back({id, c});
  std::sort(s.top.begin(), s.top.end(), [](const TargetFrequency& a, const TargetFrequency& b) {
    return a.count != b.count ? a.count > b.count : a.target_id < b.target_id;
  });
  if (s.top.size() > top_k) s.top.resize(top_k);
  return s;
}

}  // namespace gpcrfilter::dataset
