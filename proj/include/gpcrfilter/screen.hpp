#pragma once

// Virtual screening of a ligand list against one receptor: score, rank by
// probability, and flag the ones strictly above the threshold.

#include <algorithm>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gpcrfilter/chem/smiles.hpp"
#include "gpcrfilter/error.hpp"
#include "gpcrfilter/model/batch.hpp"
#include "gpcrfilter/model/model.hpp"
#include "gpcrfilter/protein/embedding_io.hpp"
#include "gpcrfilter/train/metrics.hpp"

namespace gpcrfilter::screen {

struct Ligand {
  std::string id;
  std::string smiles;
  std::size_t line = 0;
};

// One SMILES per line, optionally followed by a tab and an identifier
// (default "L<line>"). Blank lines and '#' comments are skipped.
inline std::vector<Ligand> read_ligands(std::istream& in) {
  std::vector<Ligand> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    out.push_back({tab == std::string::npos ? "L" + std::to_string(line_no) : line.substr(tab + 1),
                   line.substr(0, tab), line_no});
  }
  return out;
}

struct Scored {
  Ligand ligand;
  std::optional<double> probability;  // absent when the SMILES did not parse
  std::string error;
};

template <class T>
std::vector<Scored> score_ligands(model::InteractionModel<T>& m, const protein::EmbeddingMatrix& receptor,
                                  const std::vector<Ligand>& ligands, int batch_size = 32) {
  if (batch_size <= 0) throw InputError("batch size must be positive");
  std::vector<Scored> out;
  std::vector<chem::MolGraph> graphs;
  std::vector<std::size_t> slots;
  for (const auto& l : ligands) {
    Scored s{l, std::nullopt, {}};
    try {
      graphs.push_back(chem::parse_smiles(l.smiles));
      slots.push_back(out.size());
    } catch (const ParseError& e) {
      s.error = e.what();
    }
    out.push_back(s);
  }
  for (std::size_t b = 0; b < graphs.size(); b += static_cast<std::size_t>(batch_size)) {
    const std::size_t e = std::min(graphs.size(), b + static_cast<std::size_t>(batch_size));
    std::vector<const chem::MolGraph*> lig;
    std::vector<const protein::EmbeddingMatrix*> rec;
    for (std::size_t i = b; i < e; ++i) {
      lig.push_back(&graphs[i]);
      rec.push_back(&receptor);
    }
    const auto preds = model::predict(m, model::make_batch<T>(lig, rec, m.config().protein_width));
    for (std::size_t i = b; i < e; ++i) out[slots[i]].probability = preds[i - b].probability;
  }
  return out;
}

// Scored ligands by probability descending (input order among ties), then the
// unparseable ones in input order.
inline std::vector<Scored> rank(std::vector<Scored> s) {
  std::stable_sort(s.begin(), s.end(), [](const Scored& a, const Scored& b) {
    if (a.probability.has_value() != b.probability.has_value()) return a.probability.has_value();
    return a.probability && *a.probability > *b.probability;
  });
  return s;
}

inline bool passes(const Scored& s, double threshold = train::kDefaultThreshold) {
  return s.probability && *s.probability > threshold;
}

// TSV with columns rank, ligand_id, smiles, probability, passes, note.
inline void write_table(const std::vector<Scored>& ranked, double threshold, std::ostream& out) {
  out << "rank\tligand_id\tsmiles\tprobability\tpasses\tnote\n";
  int r = 0;
  char p[32];
  for (const auto& s : ranked) {
    if (s.probability) {
      std::snprintf(p, sizeof p, "%.8f", *s.probability);
      out << ++r << '\t' << s.ligand.id << '\t' << s.ligand.smiles << '\t' << p << '\t'
          << (passes(s, threshold) ? "yes" : "no") << "\t\n";
    } else {
      out << "-\t" << s.ligand.id << '\t' << s.ligand.smiles << "\tNA\tno\tunparseable: " << s.error << '\n';
    }
  }
}

}  // namespace gpcrfilter::screen
