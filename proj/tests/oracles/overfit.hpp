#pragma once

// Memorization run on a small synthetic set: random small molecules, stub
// receptor embeddings and random labels.

#include <chrono>
#include <string>
#include <vector>

#include "gpcrfilter/train/trainer.hpp"
#include "oracles/model_fixtures.hpp"

namespace oracle {

struct SyntheticPairs {
  std::vector<gpcrfilter::chem::MolGraph> ligands;
  std::vector<gpcrfilter::protein::EmbeddingMatrix> proteins;
  std::vector<gpcrfilter::train::Example> examples;
};

inline void synthetic_pairs(SyntheticPairs& out, std::uint64_t seed, int pairs, int receptors, int width) {
  gpcrfilter::Rng rng(seed);
  out.ligands.clear();
  out.proteins.clear();
  out.examples.clear();
  out.ligands.reserve(pairs);
  out.proteins.reserve(receptors);
  for (int r = 0; r < receptors; ++r) {
    const int len = 20 + static_cast<int>(rng.below(21));
    out.proteins.push_back(gpcrfilter::protein::stub_embed({"R" + std::to_string(r), random_sequence(rng, len)},
                                                           static_cast<std::uint32_t>(width)));
  }
  for (int i = 0; i < pairs; ++i) out.ligands.push_back(random_ligand(rng, 14));
  for (int i = 0; i < pairs; ++i)
    out.examples.push_back({&out.ligands[i], &out.proteins[rng.below(static_cast<std::uint64_t>(receptors))],
                            static_cast<int>(rng.below(2)), static_cast<std::size_t>(i)});
}

inline gpcrfilter::model::ModelConfig overfit_model_config() {
  gpcrfilter::model::ModelConfig c;
  c.hidden = 32;
  c.heads = 4;
  c.encoder_layers = 2;
  c.decoder_layers = 2;
  c.protein_width = 16;
  return c;
}

struct OverfitOutcome {
  double initial_acc = 0;
  double final_acc = 0;  // percent, eval mode, on the training pairs
  int epochs = 0;
  double seconds = 0;
  bool untrained_all_half = true;
};

// Trains until training accuracy reaches `target_acc` percent or `max_epochs`
// run out.
inline OverfitOutcome run_overfit(std::uint64_t seed, int max_epochs = 200, double target_acc = 98.0,
                                  int pairs = 50) {
  using namespace gpcrfilter;
  SyntheticPairs data;
  const auto mc = overfit_model_config();
  synthetic_pairs(data, seed, pairs, 5, mc.protein_width);
  model::InteractionModel<float> m(mc, seed);
  OverfitOutcome out;
  const auto initial = train::score(m, data.examples, 64);
  for (double p : initial.probabilities) out.untrained_all_half = out.untrained_all_half && p == 0.5;
  out.initial_acc = train::compute_metrics(initial.probabilities, initial.labels).acc;

  train::TrainConfig tc;
  tc.epochs = max_epochs;
  tc.batch_size = 10;
  tc.learning_rate = 1e-3;
  tc.early_stop_patience = max_epochs;
  tc.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  train::fit(m, data.examples, data.examples, tc, [&](const train::EpochLog& log) {
    out.epochs = log.epoch;
    out.final_acc = log.val->acc;
    return log.val->acc < target_acc;
  });
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace oracle
