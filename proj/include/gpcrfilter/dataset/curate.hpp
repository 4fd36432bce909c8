#pragma once

#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gpcrfilter/chem/canon.hpp"
#include "gpcrfilter/chem/smiles.hpp"
#include "gpcrfilter/dataset/records.hpp"
#include "gpcrfilter/error.hpp"

namespace gpcrfilter::dataset {

struct SourceRow {
  std::string target_id;
  std::string smiles;
  std::string source;
  std::size_t line = 0;
};

struct RejectedRow {
  SourceRow row;
  std::string reason;
};

struct CurationResult {
  std::vector<InteractionRecord> records;  // positives, first occurrence order
  std::vector<RejectedRow> rejects;
  std::size_t duplicates = 0;
  std::size_t distinct_targets = 0;
  std::size_t distinct_ligands = 0;
};

// Reads `target_id \t smiles \t source` rows. Blank lines and '#' comments are
// skipped, as is a leading header row starting with "target_id".
inline std::vector<SourceRow> read_source_rows(std::istream& in) {
  std::vector<SourceRow> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (rows.empty() && line.rfind("target_id", 0) == 0) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, '\t')) fields.push_back(f);
    if (fields.size() < 2) throw ParseError("expected target_id<TAB>smiles[<TAB>source]", line_no, "line");
    rows.push_back({fields[0], fields[1], fields.size() > 2 ? fields[2] : std::string(), line_no});
  }
  return rows;
}

// Standardizes every SMILES to its canonical key and drops exact
// (target, key) duplicates. Unparseable rows are returned as rejects with the
// parser's reason.
inline CurationResult curate(const std::vector<SourceRow>& rows) {
  CurationResult out;
  std::set<std::pair<std::string, std::string>> seen;
  std::set<std::string> targets, ligands;
  for (const auto& row : rows) {
    if (row.target_id.empty()) {
      out.rejects.push_back({row, "empty target id"});
      continue;
    }
    std::string key;
    try {
      key = chem::canonical_key(chem::parse_smiles(row.smiles));
    } catch (const ParseError& e) {
      out.rejects.push_back({row, e.what()});
      continue;
    }
    if (!seen.emplace(row.target_id, key).second) {
      ++out.duplicates;
      continue;
    }
    targets.insert(row.target_id);
    ligands.insert(key);
    out.records.push_back({row.target_id, key, row.smiles, Label::positive});
  }
  out.distinct_targets = targets.size();
  out.distinct_ligands = ligands.size();
  return out;
}

}  // namespace gpcrfilter::dataset
