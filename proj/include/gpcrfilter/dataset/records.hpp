#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gpcrfilter/error.hpp"

namespace gpcrfilter::dataset {

enum class Label : std::uint8_t { negative = 0, positive = 1 };

struct InteractionRecord {
  std::string target_id;
  std::string ligand_key;  // canonical SMILES from chem::canonical_key
  std::string smiles;      // as curated; equals ligand_key for sampled negatives
  Label label = Label::positive;

  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

enum class Protocol : std::uint8_t { random, intra_target, inter_target };
enum class Partition : std::uint8_t { train = 0, val = 1, test = 2 };

inline std::string_view to_string(Label l) { return l == Label::positive ? "positive" : "negative"; }

inline std::string_view to_string(Partition p) {
  static constexpr std::array<std::string_view, 3> names{"train", "val", "test"};
  return names[static_cast<int>(p)];
}

inline std::string_view to_string(Protocol p) {
  static constexpr std::array<std::string_view, 3> names{"random", "intra", "inter"};
  return names[static_cast<int>(p)];
}

inline Label parse_label(std::string_view s) {
  if (s == "positive" || s == "1") return Label::positive;
  if (s == "negative" || s == "0") return Label::negative;
  throw InputError("unknown label '" + std::string(s) + "'");
}

inline Partition parse_partition(std::string_view s) {
  if (s == "train") return Partition::train;
  if (s == "val") return Partition::val;
  if (s == "test") return Partition::test;
  throw InputError("unknown partition '" + std::string(s) + "'");
}

inline Protocol parse_protocol(std::string_view s) {
  if (s == "random") return Protocol::random;
  if (s == "intra" || s == "intra_target") return Protocol::intra_target;
  if (s == "inter" || s == "inter_target") return Protocol::inter_target;
  throw InputError("unknown protocol '" + std::string(s) + "'");
}

struct SplitManifest {
  Protocol protocol = Protocol::random;
  std::uint64_t seed = 0;
  std::vector<InteractionRecord> records;
  std::vector<Partition> assignment;  // parallel to records
  std::vector<std::string> warnings;

  std::array<std::size_t, 3> counts() const {
    std::array<std::size_t, 3> c{};
    for (Partition p : assignment) ++c[static_cast<int>(p)];
    return c;
  }

  std::vector<InteractionRecord> partition(Partition p) const {
    std::vector<InteractionRecord> out;
    for (std::size_t i = 0; i < records.size(); ++i)
      if (assignment[i] == p) out.push_back(records[i]);
    return out;
  }
};

// Interned target / ligand ids plus the set of known positive pairs.
class PairIndex {
 public:
  PairIndex() = default;
  explicit PairIndex(const std::vector<InteractionRecord>& positives) {
    for (const auto& r : positives) {
      if (r.label != Label::positive) continue;
      add_positive(r);
    }
  }

  int target(const std::string& id) {
    auto [it, inserted] = target_ids_.try_emplace(id, static_cast<int>(targets_.size()));
    if (inserted) targets_.push_back(id);
    return it->second;
  }

  int ligand(const std::string& key, const std::string& smiles) {
    auto [it, inserted] = ligand_ids_.try_emplace(key, static_cast<int>(ligand_keys_.size()));
    if (inserted) {
      ligand_keys_.push_back(key);
      ligand_smiles_.push_back(smiles.empty() ? key : smiles);
    }
    return it->second;
  }

  void add_positive(const InteractionRecord& r) {
    positives_.insert(pair_key(target(r.target_id), ligand(r.ligand_key, r.smiles)));
  }

  bool is_positive(int t, int l) const { return positives_.count(pair_key(t, l)) != 0; }

  static std::uint64_t pair_key(int t, int l) {
    return (std::uint64_t(static_cast<std::uint32_t>(t)) << 32) | static_cast<std::uint32_t>(l);
  }

  const std::string& target_name(int t) const { return targets_[t]; }
  const std::string& ligand_key(int l) const { return ligand_keys_[l]; }
  const std::string& ligand_smiles(int l) const { return ligand_smiles_[l]; }
  std::size_t target_count() const { return targets_.size(); }
  std::size_t ligand_count() const { return ligand_keys_.size(); }
  std::size_t positive_count() const { return positives_.size(); }
  const std::unordered_set<std::uint64_t>& positive_pairs() const { return positives_; }

  int find_target(const std::string& id) const {
    auto it = target_ids_.find(id);
    return it == target_ids_.end() ? -1 : it->second;
  }
  int find_ligand(const std::string& key) const {
    auto it = ligand_ids_.find(key);
    return it == ligand_ids_.end() ? -1 : it->second;
  }

 private:
  std::unordered_map<std::string, int> target_ids_;
  std::unordered_map<std::string, int> ligand_ids_;
  std::vector<std::string> targets_;
  std::vector<std::string> ligand_keys_;
  std::vector<std::string> ligand_smiles_;
  std::unordered_set<std::uint64_t> positives_;
};

}  // namespace gpcrfilter::dataset
