#pragma once

// Small models and batches shared by the model, training and acceptance tests.

#include <string>
#include <vector>

#include "gpcrfilter/chem/smiles.hpp"
#include "gpcrfilter/model/batch.hpp"
#include "gpcrfilter/model/model.hpp"
#include "gpcrfilter/protein/stub_embedder.hpp"
#include "oracles/chem_oracles.hpp"

namespace oracle {

inline gpcrfilter::model::ModelConfig tiny_config() {
  gpcrfilter::model::ModelConfig c;
  c.hidden = 8;
  c.heads = 2;
  c.encoder_layers = 1;
  c.decoder_layers = 2;
  c.protein_width = 8;
  return c;
}

inline std::string random_sequence(gpcrfilter::Rng& rng, int length) {
  static const std::string letters = "ACDEFGHIKLMNPQRSTVWY";
  std::string s;
  for (int i = 0; i < length; ++i) s += letters[rng.below(letters.size())];
  return s;
}

inline gpcrfilter::chem::MolGraph random_ligand(gpcrfilter::Rng& rng, int max_atoms) {
  const auto m = random_molecule(rng, max_atoms);
  return gpcrfilter::chem::parse_smiles(naive_smiles(m, identity_order(static_cast<int>(m.atoms.size()))));
}

// Overwrites every parameter with random values so no gradient is trivially
// zero (the untrained readout is zero-initialized).
template <class T>
void randomize(gpcrfilter::model::InteractionModel<T>& model, gpcrfilter::Rng& rng, double scale = 0.5) {
  for (auto* p : model.parameters()) {
    const bool gamma = p->name.find("gamma") != std::string::npos;
    for (auto& v : p->value.vec()) v = static_cast<T>((gamma ? 1.0 : 0.0) + scale * rng.normal());
  }
}

struct PairBatch {
  std::vector<gpcrfilter::chem::MolGraph> ligands;
  std::vector<gpcrfilter::protein::EmbeddingMatrix> proteins;

  template <class T>
  gpcrfilter::model::BatchInput<T> input(int protein_width) const {
    std::vector<const gpcrfilter::chem::MolGraph*> l;
    std::vector<const gpcrfilter::protein::EmbeddingMatrix*> p;
    for (std::size_t i = 0; i < ligands.size(); ++i) {
      l.push_back(&ligands[i]);
      p.push_back(&proteins[i]);
    }
    return gpcrfilter::model::make_batch<T>(l, p, protein_width);
  }
};

inline PairBatch random_batch(gpcrfilter::Rng& rng, int batch, int max_residues, int max_atoms, int width) {
  PairBatch b;
  for (int i = 0; i < batch; ++i) {
    b.ligands.push_back(random_ligand(rng, max_atoms));
    const int len = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_residues)));
    b.proteins.push_back(gpcrfilter::protein::stub_embed({"P" + std::to_string(i), random_sequence(rng, len)},
                                                         static_cast<std::uint32_t>(width)));
  }
  return b;
}

}  // namespace oracle
