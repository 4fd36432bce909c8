#pragma once

// Residue attention of the ligand graph token: query row 0 of the decoder
// cross-attention, averaged over heads (and over decoder layers on request),
// L1-normalized over the receptor's residues.

#include <vector>

#include "gpcrfilter/chem/molgraph.hpp"
#include "gpcrfilter/error.hpp"
#include "gpcrfilter/model/batch.hpp"
#include "gpcrfilter/model/model.hpp"
#include "gpcrfilter/protein/embedding_io.hpp"

namespace gpcrfilter::interpret {

struct AttentionVector {
  std::vector<double> scores;  // one per residue, sums to 1
  double probability = 0.5;    // model output for the same pass
};

template <class T>
AttentionVector extract_attention(model::InteractionModel<T>& m, const chem::MolGraph& ligand,
                                  const protein::EmbeddingMatrix& receptor, bool average_layers = false) {
  const auto in = model::make_batch<T>({&ligand}, {&receptor}, m.config().protein_width);
  nn::Tape<T> tape;
  const model::ForwardResult r = m.forward(tape, in, /*training=*/false);
  const int heads = m.config().heads;
  const auto layers = r.cross_attention.size();
  const std::size_t first = average_layers ? 0 : layers - 1;

  AttentionVector out;
  out.scores.assign(receptor.rows, 0.0);
  for (std::size_t l = first; l < layers; ++l) {
    const auto& P = tape.value(r.cross_attention[l]);
    for (int h = 0; h < heads; ++h)
      for (std::size_t s = 0; s < receptor.rows; ++s)
        out.scores[s] += static_cast<double>(P.at(h, 0, static_cast<int>(s)));
  }
  double total = 0;
  for (double v : out.scores) total += v;
  if (!(total > 0)) throw InvariantError("attention row has no mass");
  for (double& v : out.scores) v /= total;

  const auto& L = tape.value(r.logits);
  out.probability = model::positive_probability(static_cast<double>(L.at(0, 0)), static_cast<double>(L.at(0, 1)));
  return out;
}

}  // namespace gpcrfilter::interpret
