#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gpcrfilter/analysis/cluster.hpp"
#include "gpcrfilter/chem/canon.hpp"
#include "oracles/chem_oracles.hpp"

using namespace gpcrfilter;
using namespace gpcrfilter::analysis;

namespace {

dataset::InteractionRecord positive(const std::string& target, const std::string& smiles) {
  return {target, chem::canonical_key(chem::parse_smiles(smiles)), smiles, dataset::Label::positive};
}

std::vector<dataset::InteractionRecord> random_records(Rng& rng, int targets, int max_ligands) {
  std::vector<dataset::InteractionRecord> out;
  for (int t = 0; t < targets; ++t) {
    const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_ligands)));
    for (int i = 0; i < n; ++i) {
      const auto m = oracle::random_molecule(rng, 12);
      out.push_back(positive("T" + std::to_string(t),
                             oracle::naive_smiles(m, oracle::identity_order(static_cast<int>(m.atoms.size())))));
    }
  }
  return out;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Members of every merge as sorted target-id lists, with heights.
std::vector<std::pair<std::vector<std::string>, double>> clusters(const std::vector<ReceptorProfile>& profiles,
                                                                   const Dendrogram& dg) {
  const int n = dg.leaves;
  std::vector<std::vector<std::string>> members;
  for (int i = 0; i < n; ++i) members.push_back({profiles[i].target_id});
  std::vector<std::pair<std::vector<std::string>, double>> out;
  for (const auto& m : dg.merges) {
    auto u = members[m.a];
    u.insert(u.end(), members[m.b].begin(), members[m.b].end());
    std::sort(u.begin(), u.end());
    members.push_back(u);
    out.emplace_back(u, m.height);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Profiles, SingleLigandEqualsItsFingerprint) {
  const auto p = build_profiles({positive("T1", "c1ccccc1O")});
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].n_ligands, 1u);
  EXPECT_EQ(p[0].mean_fingerprint, chem::morgan_fingerprint(chem::parse_smiles("Oc1ccccc1")).as_real());
}

TEST(Profiles, DuplicateLigandsCountOnce) {
  const auto one = build_profiles({positive("T1", "CCO"), positive("T1", "CCN")});
  const auto dup = build_profiles({positive("T1", "CCO"), positive("T1", "OCC"), positive("T1", "CCN")});
  EXPECT_EQ(one[0].mean_fingerprint, dup[0].mean_fingerprint);
  EXPECT_EQ(dup[0].n_ligands, 2u);
}

TEST(Profiles, MeanOfTwoLigands) {
  const auto p = build_profiles({positive("T1", "CCO"), positive("T1", "c1ccccc1")});
  const auto a = chem::morgan_fingerprint(chem::parse_smiles("CCO")).as_real();
  const auto b = chem::morgan_fingerprint(chem::parse_smiles("c1ccccc1")).as_real();
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(p[0].mean_fingerprint[i], (a[i] + b[i]) / 2);
    EXPECT_GE(p[0].mean_fingerprint[i], 0.0);
    EXPECT_LE(p[0].mean_fingerprint[i], 1.0);
  }
}

TEST(Profiles, TopReceptorsByLigandCount) {
  std::vector<dataset::InteractionRecord> r{positive("B", "C"),   positive("B", "CC"), positive("A", "CCC"),
                                            positive("A", "CCCC"), positive("C", "N"), positive("D", "O"),
                                            positive("B", "CCO")};
  r.push_back({"E", chem::canonical_key(chem::parse_smiles("CN")), "CN", dataset::Label::negative});
  const auto p = build_profiles(r, 3);
  ASSERT_EQ(p.size(), 3u);
  EXPECT_EQ(p[0].target_id, "B");
  EXPECT_EQ(p[1].target_id, "A");
  EXPECT_EQ(p[2].target_id, "C");
  EXPECT_THROW(build_profiles({positive("A", "C")}, 0), InputError);
  EXPECT_THROW(build_profiles({}), InputError);
}

TEST(Linkage, TwoProfilesMergeOnceAtTheirDistance) {
  const auto dg = average_linkage({{0, 0.42}, {0.42, 0}});
  ASSERT_EQ(dg.merges.size(), 1u);
  EXPECT_EQ(dg.merges[0].height, 0.42);
  EXPECT_EQ(dg.merges[0].size, 2);
  EXPECT_EQ(dg.leaf_order, (std::vector<int>{0, 1}));
}

TEST(Linkage, HandEvaluatedThreePoints) {
  const auto dg = average_linkage({{0, 0.1, 0.9}, {0.1, 0, 0.9}, {0.9, 0.9, 0}});
  ASSERT_EQ(dg.merges.size(), 2u);
  EXPECT_EQ(dg.merges[0].a, 0);
  EXPECT_EQ(dg.merges[0].b, 1);
  EXPECT_EQ(dg.merges[0].height, 0.1);
  EXPECT_EQ(dg.merges[1].a, 2);
  EXPECT_EQ(dg.merges[1].b, 3);
  EXPECT_EQ(dg.merges[1].height, 0.9);
  EXPECT_EQ(dg.merges[1].size, 3);
}

TEST(Linkage, HandEvaluatedFourPoints) {
  // A B C D with AB 0.2, CD 0.3; the last merge averages AC AD BC BD.
  const DistanceMatrix d{{0, 0.2, 0.6, 0.8}, {0.2, 0, 0.7, 0.5}, {0.6, 0.7, 0, 0.3}, {0.8, 0.5, 0.3, 0}};
  const auto dg = average_linkage(d);
  ASSERT_EQ(dg.merges.size(), 3u);
  EXPECT_EQ(dg.merges[0].height, 0.2);
  EXPECT_EQ(dg.merges[1].height, 0.3);
  EXPECT_DOUBLE_EQ(dg.merges[2].height, 0.65);
  EXPECT_EQ(dg.leaf_order, (std::vector<int>{0, 1, 2, 3}));
}

TEST(Linkage, TiesMergeSmallestPairFirst) {
  DistanceMatrix d(5, std::vector<double>(5, 1.0));
  for (int i = 0; i < 5; ++i) d[i][i] = 0;
  const auto dg = average_linkage(d);
  EXPECT_EQ(dg.merges[0].a, 0);
  EXPECT_EQ(dg.merges[0].b, 1);
  EXPECT_EQ(dg.merges[1].a, 2);
  EXPECT_EQ(dg.merges[1].b, 3);
  EXPECT_EQ(dg.merges[2].a, 4);
  EXPECT_EQ(dg.merges[2].b, 5);
}

TEST(Linkage, RandomProfilesGiveMonotoneConsistentTrees) {
  Rng rng(3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto profiles = build_profiles(random_records(rng, 3 + trial * 4, 6));
    const auto d = distance_matrix(profiles);
    const int n = static_cast<int>(profiles.size());
    for (int i = 0; i < n; ++i) {
      EXPECT_EQ(d[i][i], 0.0);
      for (int j = 0; j < n; ++j) EXPECT_NEAR(d[i][j], d[j][i], 1e-12);
    }
    const auto dg = average_linkage(d);
    ASSERT_EQ(static_cast<int>(dg.merges.size()), n - 1);
    std::vector<std::vector<int>> members;
    for (int i = 0; i < n; ++i) members.push_back({i});
    std::vector<bool> used(2 * n, false);
    for (std::size_t k = 0; k < dg.merges.size(); ++k) {
      const auto& m = dg.merges[k];
      EXPECT_LT(m.a, m.b);
      EXPECT_FALSE(used[m.a] || used[m.b]);
      used[m.a] = used[m.b] = true;
      if (k > 0) {
        EXPECT_GE(m.height, dg.merges[k - 1].height);
      }
      // Height is the mean pairwise leaf distance between the two clusters.
      double s = 0;
      for (int i : members[m.a])
        for (int j : members[m.b]) s += d[i][j];
      EXPECT_NEAR(m.height, s / (members[m.a].size() * members[m.b].size()), 1e-12);
      auto u = members[m.a];
      u.insert(u.end(), members[m.b].begin(), members[m.b].end());
      EXPECT_EQ(static_cast<int>(u.size()), m.size);
      members.push_back(u);
    }
    auto order = dg.leaf_order;
    std::sort(order.begin(), order.end());
    std::vector<int> expected(n);
    std::iota(expected.begin(), expected.end(), 0);
    EXPECT_EQ(order, expected);
  }
}

TEST(Linkage, InvariantToProfileOrder) {
  Rng rng(4);
  auto profiles = build_profiles(random_records(rng, 12, 5));
  const auto base = clusters(profiles, average_linkage(distance_matrix(profiles)));
  for (int trial = 0; trial < 5; ++trial) {
    rng.shuffle(profiles);
    const auto again = clusters(profiles, average_linkage(distance_matrix(profiles)));
    ASSERT_EQ(again.size(), base.size());
    for (std::size_t i = 0; i < base.size(); ++i) {
      EXPECT_EQ(again[i].first, base[i].first);
      EXPECT_NEAR(again[i].second, base[i].second, 1e-12);
    }
  }
}

TEST(Export, FilesAreDeterministicAndOrderedByLeaves) {
  Rng rng(5);
  const auto records = random_records(rng, 6, 4);
  const auto dir = std::filesystem::temp_directory_path() / "gpcrfilter_cluster_test";
  std::filesystem::remove_all(dir);
  std::string csv1, json1;
  for (int run = 0; run < 2; ++run) {
    const auto profiles = build_profiles(records);
    const auto d = distance_matrix(profiles);
    const auto dg = average_linkage(d);
    export_cluster_artifacts(profiles, d, dg, dir);
    const auto csv = slurp(dir / "distances.csv");
    const auto json = slurp(dir / "dendrogram.json");
    if (run == 0) {
      csv1 = csv;
      json1 = json;
      std::istringstream in(csv);
      std::string header;
      std::getline(in, header);
      std::string expected = "target";
      for (int i : dg.leaf_order) expected += "," + profiles[i].target_id;
      EXPECT_EQ(header, expected);
      const auto j = nlohmann::json::parse(json);
      EXPECT_EQ(j["merges"].size(), profiles.size() - 1);
      EXPECT_EQ(j["leaf_order"].get<std::vector<int>>(), dg.leaf_order);
    } else {
      EXPECT_EQ(csv, csv1);
      EXPECT_EQ(json, json1);
    }
  }
  std::filesystem::remove_all(dir);
}
