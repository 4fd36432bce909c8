#include <gtest/gtest.h>

#include <sstream>

#include "gpcrfilter/rng.hpp"
#include "gpcrfilter/screen.hpp"
#include "oracles/model_fixtures.hpp"

using namespace gpcrfilter;
using screen::Scored;

namespace {

Scored scored(const std::string& id, std::optional<double> p) { return {{id, "C", 0}, p, p ? "" : "bad"}; }

}  // namespace

TEST(ReadLigands, IdsCommentsAndBlankLines) {
  std::istringstream in("# header\nCCO\tethanol\n\nc1ccccc1\r\nC1CC\tbroken\n");
  const auto l = screen::read_ligands(in);
  ASSERT_EQ(l.size(), 3u);
  EXPECT_EQ(l[0].id, "ethanol");
  EXPECT_EQ(l[0].smiles, "CCO");
  EXPECT_EQ(l[1].id, "L4");
  EXPECT_EQ(l[1].smiles, "c1ccccc1");
  EXPECT_EQ(l[2].line, 5u);
}

TEST(Screen, UntrainedModelScoresOneHalfAndNothingPasses) {
  model::InteractionModel<double> m(oracle::tiny_config(), 3);
  const auto receptor = protein::stub_embed({"R", "MKTAYIAKQR"}, 8);
  const std::vector<screen::Ligand> ligands = {{"a", "CCO", 1}, {"b", "C1CC", 2}, {"c", "c1ccccc1N", 3}};
  const auto s = screen::score_ligands(m, receptor, ligands, 2);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_DOUBLE_EQ(*s[0].probability, 0.5);
  EXPECT_FALSE(s[1].probability);
  EXPECT_NE(s[1].error.find("unclosed ring"), std::string::npos);
  EXPECT_DOUBLE_EQ(*s[2].probability, 0.5);
  for (const auto& x : s) EXPECT_FALSE(screen::passes(x));
}

TEST(Screen, BatchSizeDoesNotChangeScores) {
  Rng rng(11);
  model::InteractionModel<double> m(oracle::tiny_config(), 4);
  oracle::randomize(m, rng, 0.3);
  const auto receptor = protein::stub_embed({"R", oracle::random_sequence(rng, 25)}, 8);
  std::vector<screen::Ligand> ligands;
  for (int i = 0; i < 7; ++i) {
    const auto g = oracle::random_molecule(rng, 10);
    ligands.push_back({"L" + std::to_string(i), oracle::naive_smiles(g, oracle::identity_order(static_cast<int>(g.atoms.size()))),
                       static_cast<std::size_t>(i + 1)});
  }
  const auto one = screen::score_ligands(m, receptor, ligands, 1);
  const auto all = screen::score_ligands(m, receptor, ligands, 32);
  for (std::size_t i = 0; i < ligands.size(); ++i) EXPECT_NEAR(*one[i].probability, *all[i].probability, 1e-12);
  EXPECT_THROW(screen::score_ligands(m, receptor, ligands, 0), InputError);
}

TEST(Screen, RankIsMonotoneStableAndPutsUnparseableLast) {
  const auto r = screen::rank({scored("x", std::nullopt), scored("a", 0.2), scored("b", 0.9), scored("c", 0.2),
                               scored("y", std::nullopt), scored("d", 0.7)});
  std::vector<std::string> ids;
  for (const auto& s : r) ids.push_back(s.ligand.id);
  EXPECT_EQ(ids, (std::vector<std::string>{"b", "d", "a", "c", "x", "y"}));
}

TEST(Screen, RandomRankingsAreMonotone) {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Scored> s;
    const int n = 1 + static_cast<int>(rng.below(30));
    for (int i = 0; i < n; ++i)
      s.push_back(scored(std::to_string(i), rng.below(5) == 0 ? std::nullopt
                                                              : std::optional<double>(rng.below(4) / 4.0)));
    const auto r = screen::rank(s);
    ASSERT_EQ(r.size(), s.size());
    for (std::size_t i = 1; i < r.size(); ++i) {
      if (!r[i - 1].probability) {
        EXPECT_FALSE(r[i].probability);
      } else if (r[i].probability) {
        EXPECT_GE(*r[i - 1].probability, *r[i].probability);
        if (*r[i - 1].probability == *r[i].probability) {
          EXPECT_LT(std::stoi(r[i - 1].ligand.id), std::stoi(r[i].ligand.id));
        }
      }
    }
  }
}

TEST(Screen, ThresholdIsStrict) {
  EXPECT_FALSE(screen::passes(scored("a", 0.5)));
  EXPECT_TRUE(screen::passes(scored("a", 0.5000001)));
  EXPECT_TRUE(screen::passes(scored("a", 0.3), 0.25));
  EXPECT_FALSE(screen::passes(scored("a", std::nullopt), -1.0));
}

TEST(Screen, TableLayout) {
  std::ostringstream out;
  screen::write_table(screen::rank({scored("x", std::nullopt), scored("a", 0.75)}), 0.5, out);
  EXPECT_EQ(out.str(),
            "rank\tligand_id\tsmiles\tprobability\tpasses\tnote\n"
            "1\ta\tC\t0.75000000\tyes\t\n"
            "-\tx\tC\tNA\tno\tunparseable: bad\n");
}
