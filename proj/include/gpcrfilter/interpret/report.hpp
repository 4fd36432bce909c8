#pragma once

// JSON pocket report. Residues are identified three ways: position in the
// receptor sequence, sequential position in the PDB chain (1-based), and the
// author number with insertion code.

#include <string>

#include <nlohmann/json.hpp>

#include "gpcrfilter/interpret/align.hpp"
#include "gpcrfilter/interpret/pdb.hpp"
#include "gpcrfilter/interpret/pocket.hpp"

namespace gpcrfilter::interpret {

struct ReportContext {
  std::string target_id;
  std::string smiles;
  double probability = 0.5;
  std::string pdb_path;
  std::string ligand_resname;
  bool layer_average = false;
};

inline nlohmann::json residue_json(const PdbChain& chain, int chain_index) {
  const PdbResidue& r = chain.residues[chain_index];
  return {{"chain", std::string(1, chain.id)},
          {"sequential_number", chain_index + 1},
          {"author_number", r.label()},
          {"residue_name", r.name}};
}

inline nlohmann::json pocket_report_json(const PocketReport& report, const PdbChain& chain, const Alignment& alignment,
                                         const ReportContext& ctx) {
  nlohmann::json top = nlohmann::json::array();
  for (std::size_t i = 0; i < report.top.size(); ++i) {
    const auto& t = report.top[i];
    nlohmann::json row = residue_json(chain, t.chain_index);
    row["rank"] = i + 1;
    row["sequence_index"] = t.query_index + 1;
    row["score"] = t.score;
    row["in_pocket"] = t.in_pocket;
    top.push_back(row);
  }
  nlohmann::json pocket = nlohmann::json::array();
  for (int c : report.pocket) pocket.push_back(residue_json(chain, c));
  nlohmann::json j;
  j["target_id"] = ctx.target_id;
  j["smiles"] = ctx.smiles;
  j["probability"] = ctx.probability;
  j["structure"] = {{"pdb", ctx.pdb_path}, {"chain", std::string(1, chain.id)}, {"ligand_resname", ctx.ligand_resname}};
  j["alignment"] = {{"identity", alignment.identity},
                    {"matches", alignment.matches},
                    {"mismatches", alignment.mismatches},
                    {"gaps", alignment.gaps},
                    {"score", alignment.score}};
  j["attention"] = {{"query_token", 0}, {"head_average", true}, {"layer_average", ctx.layer_average}};
  j["k"] = report.k;
  j["top"] = top;
  j["pocket_residues"] = pocket;
  j["hits_at_k"] = report.hits;
  j["mappable_residues"] = report.mappable;
  j["pocket_mappable"] = report.pocket_mappable;
  j["expected_random_hits"] = report.expected_random;
  j["enrichment"] = report.enrichment ? nlohmann::json(*report.enrichment) : nlohmann::json(nullptr);
  return j;
}

}  // namespace gpcrfilter::interpret
