#pragma once

// Post-hoc manifest checks, derived from the records and assignments alone.
// Returns human-readable violations; an empty list means the manifest is sound.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gpcrfilter/dataset/records.hpp"

namespace gpcrfilter::dataset {

namespace detail {

struct Tally {
  std::size_t pos[3] = {0, 0, 0};
  std::size_t neg[3] = {0, 0, 0};
  std::size_t total(int p) const { return pos[p] + neg[p]; }
  std::size_t all() const { return total(0) + total(1) + total(2); }
  std::size_t all_pos() const { return pos[0] + pos[1] + pos[2]; }
};

// Exact floor/floor/remainder sizes, and positives within half a record of
// proportional at both cut points.
inline void check_eighty_ten_ten(const Tally& t, const std::string& scope, std::vector<std::string>& out) {
  const std::size_t n = t.all();
  const std::size_t train = n * 8 / 10, val = n / 10;
  if (t.total(0) != train || t.total(1) != val || t.total(2) != n - train - val) {
    out.push_back(scope + ": sizes " + std::to_string(t.total(0)) + "/" + std::to_string(t.total(1)) + "/" +
                  std::to_string(t.total(2)) + " violate the 80/10/10 floor rule for n=" + std::to_string(n));
    return;
  }
  const double p = static_cast<double>(t.all_pos());
  const double cut1 = static_cast<double>(train), cut2 = static_cast<double>(train + val);
  const double dev1 = std::abs(static_cast<double>(t.pos[0]) - cut1 * p / static_cast<double>(n));
  const double dev2 = std::abs(static_cast<double>(t.pos[0] + t.pos[1]) - cut2 * p / static_cast<double>(n));
  if (dev1 > 0.5 + 1e-9 || dev2 > 0.5 + 1e-9) out.push_back(scope + ": partitions are not label-stratified");
}

}  // namespace detail

inline std::vector<std::string> validate_manifest(const SplitManifest& m) {
  std::vector<std::string> out;
  if (m.records.size() != m.assignment.size()) {
    out.push_back("assignment does not cover every record");
    return out;
  }
  // Disjoint and exhaustive: each (target, ligand) pair appears exactly once.
  std::set<std::pair<std::string, std::string>> pairs, positives;
  for (const auto& r : m.records) {
    if (!pairs.emplace(r.target_id, r.ligand_key).second)
      out.push_back("duplicate pair " + r.target_id + " / " + r.ligand_key);
    if (r.label == Label::positive) positives.emplace(r.target_id, r.ligand_key);
  }
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& r : m.records) {
    if (r.label == Label::positive) {
      ++n_pos;
    } else {
      ++n_neg;
      if (positives.count({r.target_id, r.ligand_key}))
        out.push_back("negative collides with a positive: " + r.target_id + " / " + r.ligand_key);
    }
  }
  const bool exhausted = std::any_of(m.warnings.begin(), m.warnings.end(), [](const std::string& w) {
    return w.find("exhausted") != std::string::npos;
  });
  if (n_neg > n_pos) out.push_back("more negatives than positives");
  if ((n_neg < n_pos) != exhausted)
    out.push_back("class balance and exhaustion warning disagree (" + std::to_string(n_pos) + " positives, " +
                  std::to_string(n_neg) + " negatives)");

  std::map<std::string, detail::Tally> per_target;
  detail::Tally global;
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const int p = static_cast<int>(m.assignment[i]);
    auto& t = per_target[m.records[i].target_id];
    if (m.records[i].label == Label::positive) {
      ++t.pos[p];
      ++global.pos[p];
    } else {
      ++t.neg[p];
      ++global.neg[p];
    }
  }

  switch (m.protocol) {
    case Protocol::random:
      detail::check_eighty_ten_ten(global, "random split", out);
      break;
    case Protocol::intra_target: {
      std::set<std::pair<std::string, std::string>> train_pairs;
      std::set<std::string> train_targets;
      for (std::size_t i = 0; i < m.records.size(); ++i)
        if (m.assignment[i] == Partition::train) {
          train_pairs.emplace(m.records[i].target_id, m.records[i].ligand_key);
          train_targets.insert(m.records[i].target_id);
        }
      for (std::size_t i = 0; i < m.records.size(); ++i) {
        if (m.assignment[i] == Partition::train) continue;
        const auto& r = m.records[i];
        if (!train_targets.count(r.target_id)) out.push_back("evaluation target unseen in train: " + r.target_id);
        if (train_pairs.count({r.target_id, r.ligand_key}))
          out.push_back("evaluation pair also in train: " + r.target_id + " / " + r.ligand_key);
      }
      for (const auto& [target, t] : per_target) {
        if (t.all_pos() < 10) {
          if (t.total(1) || t.total(2)) out.push_back("target " + target + " has <10 positives but is not train-only");
        } else {
          detail::check_eighty_ten_ten(t, "target " + target, out);
        }
      }
      break;
    }
    case Protocol::inter_target: {
      std::set<std::string> train_targets, eval_targets;
      for (std::size_t i = 0; i < m.records.size(); ++i)
        (m.assignment[i] == Partition::train ? train_targets : eval_targets).insert(m.records[i].target_id);
      for (const auto& t : eval_targets)
        if (train_targets.count(t)) out.push_back("target in both train and held-out sets: " + t);
      const std::size_t val = global.total(1), test = global.total(2);
      if ((val > test ? val - test : test - val) > 1)
        out.push_back("val/test sizes differ by more than one: " + std::to_string(val) + " vs " + std::to_string(test));
      break;
    }
  }
  return out;
}

}  // namespace gpcrfilter::dataset
