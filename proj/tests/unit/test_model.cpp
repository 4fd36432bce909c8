#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gpcrfilter/model/checkpoint.hpp"
#include "gpcrfilter/model/model.hpp"
#include "oracles/gradcheck.hpp"
#include "oracles/model_fixtures.hpp"

using namespace gpcrfilter;
using namespace gpcrfilter::model;

namespace {

std::vector<double> logits_of(InteractionModel<double>& m, const BatchInput<double>& in) {
  nn::Tape<double> tape;
  return tape.value(m.forward(tape, in, false).logits).vec();
}

}  // namespace

TEST(ModelConfig, Validation) {
  ModelConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(c.ffn_width(), 1024);
  EXPECT_EQ(c.readout_hidden(), 128);
  c.heads = 3;
  EXPECT_THROW(c.validate(), InputError);
}

TEST(Model, DefaultParameterNamesAreUnique) {
  InteractionModel<float> m(ModelConfig{}, 1);
  std::set<std::string> names;
  for (auto* p : m.parameters()) EXPECT_TRUE(names.insert(p->name).second) << p->name;
  EXPECT_NE(m.find("graph_token"), nullptr);
  EXPECT_NE(m.find("decoder.1.cross_attn.o.weight"), nullptr);
  EXPECT_GT(m.parameter_count(), 1000000u);
}

TEST(Model, UntrainedPredictsOneHalf) {
  Rng rng(1);
  auto cfg = oracle::tiny_config();
  InteractionModel<double> m(cfg, 3);
  const auto batch = oracle::random_batch(rng, 6, 12, 10, cfg.protein_width);
  for (const auto& p : predict(m, batch.input<double>(cfg.protein_width))) {
    EXPECT_EQ(p.probability, 0.5);
    EXPECT_EQ(p.logit_positive, 0.0);
  }
}

TEST(Model, ProbabilityNormalization) {
  EXPECT_EQ(positive_probability(1.7, 1.7), 0.5);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const double a = 10 * rng.normal(), b = 10 * rng.normal();
    EXPECT_NEAR(positive_probability(a, b) + positive_probability(b, a), 1.0, 1e-12);
  }
}

TEST(Model, TinyConfigGradientsMatchFiniteDifferences) {
  Rng rng(5);
  const auto cfg = oracle::tiny_config();
  InteractionModel<double> m(cfg, 7);
  oracle::randomize(m, rng);
  oracle::PairBatch batch;
  batch.ligands = {chem::parse_smiles("CC(=O)N"), chem::parse_smiles("C1CC1")};
  batch.proteins = {protein::stub_embed({"A", "MKTAY"}, 8), protein::stub_embed({"B", "MKT"}, 8)};
  const auto in = batch.input<double>(cfg.protein_width);
  ASSERT_EQ(in.max_residues(), 5);
  ASSERT_EQ(in.max_atoms(), 4);
  const auto r = oracle::grad_check(m.parameters(), [&](nn::Tape<double>& tape) {
    m.reseed_dropout(99);
    return nn::cross_entropy(tape, m.forward(tape, in, /*training=*/true).logits, {1, 0});
  });
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
  EXPECT_EQ(r.checked, m.parameter_count());
}

TEST(Model, EvalIsDeterministicAndTrainingIsNot) {
  Rng rng(6);
  const auto cfg = oracle::tiny_config();
  InteractionModel<double> m(cfg, 1);
  oracle::randomize(m, rng);
  const auto in = oracle::random_batch(rng, 3, 9, 8, cfg.protein_width).input<double>(cfg.protein_width);
  EXPECT_EQ(logits_of(m, in), logits_of(m, in));
  nn::Tape<double> t1, t2;
  const auto a = t1.value(m.forward(t1, in, true).logits).vec();
  const auto b = t2.value(m.forward(t2, in, true).logits).vec();
  EXPECT_NE(a, b);
}

TEST(Model, PaddingNeverChangesLogits) {
  Rng rng(8);
  const auto cfg = oracle::tiny_config();
  InteractionModel<double> m(cfg, 2);
  oracle::randomize(m, rng);
  for (int trial = 0; trial < 20; ++trial) {
    auto in = oracle::random_batch(rng, 3, 10, 9, cfg.protein_width).input<double>(cfg.protein_width);
    const auto before = logits_of(m, in);
    const int B = in.batch(), S = in.max_residues(), V = in.max_atoms();
    for (int b = 0; b < B; ++b) {
      for (int s = 0; s < S; ++s)
        if (!in.residue_mask[b * S + s])
          for (int c = 0; c < cfg.protein_width; ++c) in.residues.at(b, s, c) = 1e3 * rng.normal();
      for (int a = 0; a < V; ++a)
        if (!in.token_mask[b * (V + 1) + 1 + a])
          for (int c = 0; c < cfg.atom_width; ++c) in.atoms.at(b, a, c) = 1e3 * rng.normal();
    }
    EXPECT_EQ(logits_of(m, in), before);
  }
}

TEST(Model, AttentionRowsAreStochasticAndPaddingGetsNothing) {
  Rng rng(9);
  const auto cfg = oracle::tiny_config();
  InteractionModel<double> m(cfg, 4);
  oracle::randomize(m, rng);
  const auto in = oracle::random_batch(rng, 3, 10, 7, cfg.protein_width).input<double>(cfg.protein_width);
  nn::Tape<double> tape;
  const auto r = m.forward(tape, in, false);
  const int S = in.max_residues(), V = in.max_atoms();
  for (const auto& var : r.cross_attention) {
    const auto& P = tape.value(var);
    ASSERT_EQ(P.dim(0), in.batch() * cfg.heads);
    ASSERT_EQ(P.dim(1), V + 1);
    ASSERT_EQ(P.dim(2), S);
    for (int bh = 0; bh < P.dim(0); ++bh)
      for (int n = 0; n <= V; ++n) {
        double sum = 0;
        for (int s = 0; s < S; ++s) {
          if (!in.residue_mask[(bh / cfg.heads) * S + s]) { EXPECT_EQ(P.at(bh, n, s), 0.0); }
          sum += P.at(bh, n, s);
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
      }
  }
  for (const auto& var : r.encoder_attention) {
    const auto& P = tape.value(var);
    for (int bh = 0; bh < P.dim(0); ++bh)
      for (int n = 0; n < S; ++n) {
        if (!in.residue_mask[(bh / cfg.heads) * S + n]) continue;
        for (int s = 0; s < S; ++s)
          if (!in.residue_mask[(bh / cfg.heads) * S + s]) { EXPECT_EQ(P.at(bh, n, s), 0.0); }
      }
  }
}

TEST(Model, SingleResidueAndSingleAtom) {
  Rng rng(10);
  const auto cfg = oracle::tiny_config();
  InteractionModel<double> m(cfg, 5);
  oracle::randomize(m, rng);
  oracle::PairBatch batch;
  batch.ligands = {chem::parse_smiles("C")};
  batch.proteins = {protein::stub_embed({"P", "M"}, 8)};
  const auto in = batch.input<double>(cfg.protein_width);
  nn::Tape<double> tape;
  const auto r = m.forward(tape, in, false);
  for (const auto& var : r.cross_attention)
    for (double v : tape.value(var).vec()) EXPECT_EQ(v, 1.0);
  for (const auto& var : r.ligand_attention) {
    const auto& P = tape.value(var);
    ASSERT_EQ(P.dim(1), 2);
    ASSERT_EQ(P.dim(2), 2);
    for (int bh = 0; bh < P.dim(0); ++bh)
      for (int n = 0; n < 2; ++n) {
        EXPECT_GE(P.at(bh, n, 0), 0.0);
        EXPECT_NEAR(P.at(bh, n, 0) + P.at(bh, n, 1), 1.0, 1e-12);
      }
  }
}

TEST(Model, ResiduePermutationLeavesReadoutUnchanged) {
  Rng rng(11);
  const auto cfg = oracle::tiny_config();
  InteractionModel<double> m(cfg, 6);
  oracle::randomize(m, rng);
  for (int trial = 0; trial < 10; ++trial) {
    auto batch = oracle::random_batch(rng, 1, 12, 8, cfg.protein_width);
    const auto before = logits_of(m, batch.input<double>(cfg.protein_width));
    auto& p = batch.proteins[0];
    std::vector<int> perm(p.rows);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    std::vector<float> shuffled(p.values.size());
    for (std::size_t r = 0; r < p.rows; ++r)
      std::copy(p.row(perm[r]).begin(), p.row(perm[r]).end(), shuffled.begin() + r * p.width);
    p.values = shuffled;
    const auto after = logits_of(m, batch.input<double>(cfg.protein_width));
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(after[i], before[i], 1e-9);
  }
}

TEST(Model, BatchingDoesNotChangePredictions) {
  Rng rng(12);
  const auto cfg = oracle::tiny_config();
  InteractionModel<double> m(cfg, 8);
  oracle::randomize(m, rng);
  const auto batch = oracle::random_batch(rng, 4, 10, 9, cfg.protein_width);
  const auto together = predict(m, batch.input<double>(cfg.protein_width));
  for (std::size_t i = 0; i < 4; ++i) {
    oracle::PairBatch single;
    single.ligands = {batch.ligands[i]};
    single.proteins = {batch.proteins[i]};
    EXPECT_NEAR(predict(m, single.input<double>(cfg.protein_width))[0].probability, together[i].probability, 1e-12);
  }
}

TEST(Batch, MasksMarkRealPositions) {
  Rng rng(13);
  const auto batch = oracle::random_batch(rng, 3, 7, 6, 8);
  const auto in = batch.input<float>(8);
  const int S = in.max_residues(), V = in.max_atoms();
  for (int b = 0; b < 3; ++b) {
    for (int s = 0; s < S; ++s)
      EXPECT_EQ(in.residue_mask[b * S + s] != 0, s < static_cast<int>(batch.proteins[b].rows));
    EXPECT_EQ(in.token_mask[b * (V + 1)], 1);
    for (int a = 0; a < V; ++a)
      EXPECT_EQ(in.token_mask[b * (V + 1) + 1 + a] != 0, a < batch.ligands[b].atom_count());
  }
  const auto wrong = protein::stub_embed({"P", "MK"}, 16);
  EXPECT_THROW(make_batch<float>({&batch.ligands[0]}, {&wrong}, 8), InputError);
}

TEST(Batch, NormalizedAdjacencyWeights) {
  const auto g = chem::parse_smiles("CC(C)C");  // isobutane: centre degree 3
  const auto edges = normalized_adjacency(g);
  for (const auto& e : edges) {
    const double di = static_cast<double>(g.adjacency[e.target].size()) + 1;
    const double dj = static_cast<double>(g.adjacency[e.source].size()) + 1;
    EXPECT_DOUBLE_EQ(e.weight, 1.0 / std::sqrt(di * dj));
  }
  EXPECT_EQ(edges.size(), static_cast<std::size_t>(g.atom_count() + 2 * g.bond_count()));
}

TEST(Checkpoint, RoundTripPreservesPredictions) {
  Rng rng(14);
  auto cfg = oracle::tiny_config();
  cfg.hidden = 16;
  InteractionModel<float> m(cfg, 3);
  oracle::randomize(m, rng);
  const auto bytes = encode_checkpoint(make_checkpoint(m, {{"seed", "3"}}));
  const Checkpoint ck = decode_checkpoint(bytes);
  EXPECT_EQ(ck.config.hidden, 16);
  EXPECT_EQ(ck.metadata.at("seed"), "3");
  InteractionModel<float> back(ck.config, 0);
  load_checkpoint(back, ck);
  const auto in = oracle::random_batch(rng, 3, 8, 8, cfg.protein_width).input<float>(cfg.protein_width);
  const auto a = predict(m, in), b = predict(back, in);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].probability, b[i].probability);
  EXPECT_EQ(encode_checkpoint(make_checkpoint(back, {{"seed", "3"}})), bytes);
}

TEST(Checkpoint, Errors) {
  InteractionModel<float> m(oracle::tiny_config(), 3);
  const std::string bytes = encode_checkpoint(make_checkpoint(m));
  EXPECT_EQ(bytes.substr(0, 7), "GFCKPT1");
  EXPECT_THROW(decode_checkpoint("GFCKPT0" + bytes.substr(7)), InputError);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 3)), InputError);
  EXPECT_THROW(decode_checkpoint(bytes + "x"), InputError);
  auto other_cfg = oracle::tiny_config();
  other_cfg.hidden = 16;
  InteractionModel<float> other(other_cfg, 1);
  EXPECT_THROW(load_checkpoint(other, decode_checkpoint(bytes)), InputError);
}
