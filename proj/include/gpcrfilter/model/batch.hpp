#pragma once

// Padded model input for a batch of (ligand graph, residue embeddings) pairs.
//
//   residues      [B, S_max, h_t], zero beyond each protein's length
//   residue_mask  B * S_max bytes, 1 on real residues
//   atoms         [B, V_max, h_d] atom features, zero beyond each ligand
//   token_mask    B * (1 + V_max) bytes; index 0 is the graph-level token and is always 1
//   gcn_edges     normalized adjacency with self-loops: weight 1/sqrt(deg(i) deg(j)),
//                 degrees counting the self-loop

#include <cmath>
#include <cstdint>
#include <vector>

#include "gpcrfilter/chem/molgraph.hpp"
#include "gpcrfilter/error.hpp"
#include "gpcrfilter/nn/autograd.hpp"
#include "gpcrfilter/nn/tensor.hpp"
#include "gpcrfilter/protein/embedding_io.hpp"

namespace gpcrfilter::model {

template <class T>
struct BatchInput {
  nn::Tensor<T> residues;
  std::vector<std::uint8_t> residue_mask;
  nn::Tensor<T> atoms;
  std::vector<std::uint8_t> token_mask;
  std::vector<nn::WeightedEdge> gcn_edges;

  int batch() const { return residues.dim(0); }
  int max_residues() const { return residues.dim(1); }
  int max_atoms() const { return atoms.dim(1); }
};

// Symmetric-normalized adjacency entries of one molecule, self-loops included.
inline std::vector<nn::WeightedEdge> normalized_adjacency(const chem::MolGraph& g, int batch_index = 0) {
  std::vector<nn::WeightedEdge> edges;
  const int n = g.atom_count();
  std::vector<double> deg(n);
  for (int i = 0; i < n; ++i) deg[i] = static_cast<double>(g.adjacency[i].size()) + 1.0;
  for (int i = 0; i < n; ++i) {
    edges.push_back({batch_index, i, i, 1.0 / deg[i]});
    for (auto [j, _] : g.adjacency[i]) edges.push_back({batch_index, i, j, 1.0 / std::sqrt(deg[i] * deg[j])});
  }
  return edges;
}

template <class T>
BatchInput<T> make_batch(const std::vector<const chem::MolGraph*>& ligands,
                         const std::vector<const protein::EmbeddingMatrix*>& proteins, int protein_width) {
  if (ligands.size() != proteins.size() || ligands.empty()) throw InvariantError("make_batch: size mismatch");
  const int B = static_cast<int>(ligands.size());
  int S = 0, V = 0;
  for (int b = 0; b < B; ++b) {
    if (proteins[b]->rows == 0) throw InputError("protein " + proteins[b]->protein_id + " has no residues");
    if (static_cast<int>(proteins[b]->width) != protein_width)
      throw InputError("embedding width " + std::to_string(proteins[b]->width) + " for " + proteins[b]->protein_id +
                       " does not match model width " + std::to_string(protein_width));
    S = std::max(S, static_cast<int>(proteins[b]->rows));
    V = std::max(V, ligands[b]->atom_count());
  }
  const int H = chem::kAtomFeatureWidth;
  BatchInput<T> in;
  in.residues = nn::Tensor<T>({B, S, protein_width});
  in.residue_mask.assign(static_cast<std::size_t>(B) * S, 0);
  in.atoms = nn::Tensor<T>({B, V, H});
  in.token_mask.assign(static_cast<std::size_t>(B) * (V + 1), 0);
  for (int b = 0; b < B; ++b) {
    const auto& p = *proteins[b];
    for (int s = 0; s < static_cast<int>(p.rows); ++s) {
      in.residue_mask[static_cast<std::size_t>(b) * S + s] = 1;
      for (int c = 0; c < protein_width; ++c) in.residues.at(b, s, c) = static_cast<T>(p.at(s, c));
    }
    const auto& g = *ligands[b];
    if (g.features.size() != static_cast<std::size_t>(g.atom_count()) * H)
      throw InvariantError("ligand graph is not featurized");
    in.token_mask[static_cast<std::size_t>(b) * (V + 1)] = 1;
    for (int a = 0; a < g.atom_count(); ++a) {
      in.token_mask[static_cast<std::size_t>(b) * (V + 1) + 1 + a] = 1;
      for (int c = 0; c < H; ++c) in.atoms.at(b, a, c) = static_cast<T>(g.features[static_cast<std::size_t>(a) * H + c]);
    }
    auto edges = normalized_adjacency(g, b);
    in.gcn_edges.insert(in.gcn_edges.end(), edges.begin(), edges.end());
  }
  return in;
}

}  // namespace gpcrfilter::model
