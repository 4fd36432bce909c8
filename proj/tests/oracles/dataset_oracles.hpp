#pragma once

// Synthetic corpora and an exhaustive, test-side protocol checker that shares
// no code with the library validator.

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gpcrfilter/dataset/records.hpp"
#include "gpcrfilter/rng.hpp"

namespace oracle {

using gpcrfilter::dataset::InteractionRecord;
using gpcrfilter::dataset::Label;
using gpcrfilter::dataset::Partition;
using gpcrfilter::dataset::Protocol;
using gpcrfilter::dataset::SplitManifest;

// Random positives over `targets` x `ligands` ids with skewed per-target counts.
inline std::vector<InteractionRecord> random_corpus(gpcrfilter::Rng& rng, int targets, int ligands,
                                                    double density) {
  std::vector<InteractionRecord> out;
  for (int t = 0; t < targets; ++t) {
    const double d = density * (0.2 + 1.6 * rng.uniform());
    for (int l = 0; l < ligands; ++l)
      if (rng.uniform() < d)
        out.push_back({"T" + std::to_string(t), "L" + std::to_string(l), "L" + std::to_string(l), Label::positive});
  }
  if (out.empty()) out.push_back({"T0", "L0", "L0", Label::positive});
  return out;
}

// Returns violations of the stated protocol rules, re-derived by brute force.
inline std::vector<std::string> check_manifest(const SplitManifest& m,
                                               const std::vector<InteractionRecord>& positives) {
  std::vector<std::string> bad;
  const std::size_t n = m.records.size();
  if (m.assignment.size() != n) return {"assignment size"};

  std::set<std::pair<std::string, std::string>> global_pos;
  for (const auto& r : positives) global_pos.insert({r.target_id, r.ligand_key});

  // Every curated positive appears exactly once; negatives never collide.
  std::map<std::pair<std::string, std::string>, int> seen;
  std::size_t npos = 0, nneg = 0;
  for (const auto& r : m.records) {
    if (++seen[{r.target_id, r.ligand_key}] > 1) bad.push_back("duplicate pair");
    if (r.label == Label::positive) {
      ++npos;
      if (!global_pos.count({r.target_id, r.ligand_key})) bad.push_back("invented positive");
    } else {
      ++nneg;
      if (global_pos.count({r.target_id, r.ligand_key})) bad.push_back("negative collides with positive");
    }
  }
  if (npos != positives.size()) bad.push_back("positives lost");
  bool exhausted = false;
  for (const auto& w : m.warnings) exhausted = exhausted || w.find("exhausted") != std::string::npos;
  if (nneg > npos) bad.push_back("more negatives than positives");
  if ((nneg < npos) != exhausted) bad.push_back("warning iff imbalance violated");

  auto sizes_ok = [&](const std::vector<std::size_t>& idx) {
    std::size_t c[3] = {0, 0, 0}, p[3] = {0, 0, 0};
    for (auto i : idx) {
      ++c[static_cast<int>(m.assignment[i])];
      if (m.records[i].label == Label::positive) ++p[static_cast<int>(m.assignment[i])];
    }
    const std::size_t total = idx.size();
    const std::size_t tr = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(total) + 1e-9));
    const std::size_t va = static_cast<std::size_t>(std::floor(0.1 * static_cast<double>(total) + 1e-9));
    if (c[0] != tr || c[1] != va || c[2] != total - tr - va) return false;
    // Stratification: positive share of each cut prefix within half a record.
    const double P = static_cast<double>(p[0] + p[1] + p[2]);
    const double e1 = static_cast<double>(tr) * P / static_cast<double>(total);
    const double e2 = static_cast<double>(tr + va) * P / static_cast<double>(total);
    return std::abs(static_cast<double>(p[0]) - e1) <= 0.5 + 1e-9 &&
           std::abs(static_cast<double>(p[0] + p[1]) - e2) <= 0.5 + 1e-9;
  };

  if (m.protocol == Protocol::random) {
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    if (!sizes_ok(all)) bad.push_back("random split not stratified 80/10/10");
  } else if (m.protocol == Protocol::intra_target) {
    std::map<std::string, std::vector<std::size_t>> by_target;
    std::map<std::string, std::size_t> pos_count;
    for (std::size_t i = 0; i < n; ++i) by_target[m.records[i].target_id].push_back(i);
    for (const auto& r : positives) ++pos_count[r.target_id];
    std::set<std::string> train_targets;
    std::set<std::pair<std::string, std::string>> train_pairs;
    for (std::size_t j = 0; j < n; ++j)
      if (m.assignment[j] == Partition::train) {
        train_targets.insert(m.records[j].target_id);
        train_pairs.insert({m.records[j].target_id, m.records[j].ligand_key});
      }
    for (std::size_t i = 0; i < n; ++i) {
      if (m.assignment[i] == Partition::train) continue;
      if (!train_targets.count(m.records[i].target_id)) bad.push_back("eval target unseen in train");
      if (train_pairs.count({m.records[i].target_id, m.records[i].ligand_key})) bad.push_back("eval pair in train");
    }
    for (const auto& [t, idx] : by_target) {
      if (pos_count[t] < 10) {
        for (auto i : idx)
          if (m.assignment[i] != Partition::train) bad.push_back("small target not train-only");
      } else if (!sizes_ok(idx)) {
        bad.push_back("target " + t + " not stratified 80/10/10");
      }
    }
  } else {
    std::set<std::string> tr, ev;
    std::size_t val = 0, test = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (m.assignment[i] == Partition::train) {
        tr.insert(m.records[i].target_id);
      } else {
        ev.insert(m.records[i].target_id);
        (m.assignment[i] == Partition::val ? val : test) += 1;
      }
    }
    for (const auto& t : ev)
      if (tr.count(t)) bad.push_back("target in train and held-out");
    if ((val > test ? val - test : test - val) > 1) bad.push_back("val/test not equal +-1");
    std::set<std::string> all_targets;
    for (const auto& r : positives) all_targets.insert(r.target_id);
    std::set<std::string> pos_train;
    for (std::size_t i = 0; i < n; ++i)
      if (m.assignment[i] == Partition::train && m.records[i].label == Label::positive)
        pos_train.insert(m.records[i].target_id);
    const std::size_t expect_train = std::max<std::size_t>(
        1, std::min<std::size_t>(all_targets.size() - 1, all_targets.size() * 9 / 10));
    if (pos_train.size() != expect_train) bad.push_back("target partition is not 9:1 by count");
  }
  return bad;
}

}  // namespace oracle
