#pragma once

// Receptor ligand profiles (mean Morgan fingerprints over each receptor's
// positive ligands) and average-linkage clustering on continuous Tanimoto
// distance.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpcrfilter/chem/fingerprint.hpp"
#include "gpcrfilter/chem/smiles.hpp"
#include "gpcrfilter/dataset/records.hpp"
#include "gpcrfilter/error.hpp"

namespace gpcrfilter::analysis {

inline constexpr int kDefaultTopReceptors = 20;

struct ReceptorProfile {
  std::string target_id;
  std::vector<double> mean_fingerprint;
  std::size_t n_ligands = 0;
};

// Profiles of the `top_n` receptors with the most distinct positive ligands
// (ties by target id), in that rank order.
inline std::vector<ReceptorProfile> build_profiles(const std::vector<dataset::InteractionRecord>& records,
                                                   int top_n = kDefaultTopReceptors, int radius = 2,
                                                   int width = chem::kFingerprintWidth) {
  if (top_n <= 0) throw InputError("top_n must be positive");
  std::map<std::string, std::map<std::string, std::string>> ligands;  // target -> key -> smiles
  for (const auto& r : records)
    if (r.label == dataset::Label::positive)
      ligands[r.target_id].emplace(r.ligand_key, r.smiles.empty() ? r.ligand_key : r.smiles);
  if (ligands.empty()) throw InputError("no positive records to profile");

  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (const auto& [t, l] : ligands) ranked.emplace_back(t, l.size());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  if (static_cast<int>(ranked.size()) > top_n) ranked.resize(top_n);

  std::map<std::string, std::vector<double>> fp_cache;
  std::vector<ReceptorProfile> out;
  for (const auto& [target, count] : ranked) {
    ReceptorProfile p{target, std::vector<double>(width, 0.0), count};
    for (const auto& [key, smiles] : ligands[target]) {
      auto it = fp_cache.find(key);
      if (it == fp_cache.end()) {
        chem::MolGraph g;
        try {
          g = chem::parse_smiles(smiles);
        } catch (const ParseError& e) {
          throw InputError("ligand '" + smiles + "' of " + target + ": " + e.what());
        }
        it = fp_cache.emplace(key, chem::morgan_fingerprint(g, radius, width).as_real()).first;
      }
      for (int i = 0; i < width; ++i) p.mean_fingerprint[i] += it->second[i];
    }
    for (double& v : p.mean_fingerprint) v /= static_cast<double>(count);
    out.push_back(std::move(p));
  }
  return out;
}

using DistanceMatrix = std::vector<std::vector<double>>;

inline DistanceMatrix distance_matrix(const std::vector<ReceptorProfile>& profiles) {
  const std::size_t n = profiles.size();
  DistanceMatrix d(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      d[i][j] = d[j][i] = chem::tanimoto_distance(profiles[i].mean_fingerprint, profiles[j].mean_fingerprint);
  return d;
}

struct Merge {
  int a = 0, b = 0;  // node ids: leaves 0..n-1, merge k creates node n+k; a < b
  double height = 0;
  int size = 0;
};

struct Dendrogram {
  int leaves = 0;
  std::vector<Merge> merges;
  std::vector<int> leaf_order;  // depth-first, smaller node id first
};

// Agglomerative average linkage. Among equally close cluster pairs the one
// with the smallest (lower id, higher id) is merged first.
inline Dendrogram average_linkage(const DistanceMatrix& d) {
  const int n = static_cast<int>(d.size());
  if (n == 0) throw InputError("nothing to cluster");
  Dendrogram dg;
  dg.leaves = n;
  std::map<int, std::vector<int>> active;  // node id -> member leaves
  for (int i = 0; i < n; ++i) active[i] = {i};
  auto linkage = [&](const std::vector<int>& x, const std::vector<int>& y) {
    double s = 0;
    for (int i : x)
      for (int j : y) s += d[i][j];
    return s / static_cast<double>(x.size() * y.size());
  };
  std::vector<std::pair<int, int>> children;
  while (active.size() > 1) {
    double best = std::numeric_limits<double>::infinity();
    int ba = -1, bb = -1;
    for (auto i = active.begin(); i != active.end(); ++i)
      for (auto j = std::next(i); j != active.end(); ++j) {
        const double v = linkage(i->second, j->second);
        if (v < best) {  // iteration order already visits smaller pairs first
          best = v;
          ba = i->first;
          bb = j->first;
        }
      }
    std::vector<int> members = active[ba];
    members.insert(members.end(), active[bb].begin(), active[bb].end());
    const int id = n + static_cast<int>(dg.merges.size());
    dg.merges.push_back({ba, bb, best, static_cast<int>(members.size())});
    children.emplace_back(ba, bb);
    active.erase(ba);
    active.erase(bb);
    active[id] = std::move(members);
  }
  for (std::size_t k = 1; k < dg.merges.size(); ++k)
    if (dg.merges[k].height < dg.merges[k - 1].height - 1e-12)
      throw InvariantError("average-linkage heights decreased at merge " + std::to_string(k));

  std::vector<int> stack{n == 1 ? 0 : n + static_cast<int>(dg.merges.size()) - 1};
  while (!stack.empty()) {
    const int node = stack.back();
    stack.pop_back();
    if (node < n) {
      dg.leaf_order.push_back(node);
    } else {
      stack.push_back(children[node - n].second);
      stack.push_back(children[node - n].first);
    }
  }
  return dg;
}

inline void write_matrix_csv(const std::vector<ReceptorProfile>& profiles, const DistanceMatrix& d,
                             const Dendrogram& dg, std::ostream& out) {
  out << "target";
  for (int i : dg.leaf_order) out << ',' << profiles[i].target_id;
  out << '\n' << std::setprecision(17);
  for (int i : dg.leaf_order) {
    out << profiles[i].target_id;
    for (int j : dg.leaf_order) out << ',' << d[i][j];
    out << '\n';
  }
}

inline nlohmann::json dendrogram_json(const std::vector<ReceptorProfile>& profiles, const Dendrogram& dg) {
  nlohmann::json leaves = nlohmann::json::array();
  for (const auto& p : profiles) leaves.push_back({{"target_id", p.target_id}, {"n_ligands", p.n_ligands}});
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& m : dg.merges) merges.push_back({{"a", m.a}, {"b", m.b}, {"height", m.height}, {"size", m.size}});
  return {{"linkage", "average"},
          {"distance", "tanimoto"},
          {"leaves", leaves},
          {"leaf_order", dg.leaf_order},
          {"merges", merges}};
}

// Writes distances.csv and dendrogram.json into `dir`.
inline void export_cluster_artifacts(const std::vector<ReceptorProfile>& profiles, const DistanceMatrix& d,
                                     const Dendrogram& dg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / "distances.csv");
  std::ofstream js(dir / "dendrogram.json");
  if (!csv || !js) throw InputError("cannot write cluster artifacts to " + dir.string());
  write_matrix_csv(profiles, d, dg, csv);
  js << dendrogram_json(profiles, dg).dump(2) << '\n';
}

}  // namespace gpcrfilter::analysis
