#pragma once

// Text formats:
//   curated positives   target_id \t ligand_key \t smiles
//   split manifest      target_id \t ligand_key \t label \t partition
//                       preceded by "# protocol=<p> seed=<n>" and "# warning: ..." lines
//   stats sidecar       JSON (see manifest_stats_json)

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpcrfilter/dataset/curate.hpp"
#include "gpcrfilter/dataset/records.hpp"
#include "gpcrfilter/dataset/stats.hpp"
#include "gpcrfilter/error.hpp"

namespace gpcrfilter::dataset {

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot open " + p.string());
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw InputError("cannot write " + p.string());
  return out;
}

}  // namespace detail

inline void write_positives(const std::vector<InteractionRecord>& records, std::ostream& out) {
  for (const auto& r : records) out << r.target_id << '\t' << r.ligand_key << '\t' << r.smiles << '\n';
}

inline std::vector<InteractionRecord> read_positives(std::istream& in) {
  std::vector<InteractionRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto f = detail::split_tabs(line);
    if (f.size() < 2) throw ParseError("expected target_id<TAB>ligand_key[<TAB>smiles]", line_no, "line");
    out.push_back({f[0], f[1], f.size() > 2 ? f[2] : f[1], Label::positive});
  }
  return out;
}

inline void write_manifest(const SplitManifest& m, std::ostream& out) {
  out << "# protocol=" << to_string(m.protocol) << " seed=" << m.seed << '\n';
  for (const auto& w : m.warnings) out << "# warning: " << w << '\n';
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    out << r.target_id << '\t' << r.ligand_key << '\t' << to_string(r.label) << '\t' << to_string(m.assignment[i])
        << '\n';
  }
}

inline SplitManifest read_manifest(std::istream& in) {
  SplitManifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# protocol=", 0) == 0) {
        std::istringstream hdr(line.substr(2));
        std::string tok;
        while (hdr >> tok) {
          if (tok.rfind("protocol=", 0) == 0) m.protocol = parse_protocol(tok.substr(9));
          if (tok.rfind("seed=", 0) == 0) m.seed = std::stoull(tok.substr(5));
        }
      } else if (line.rfind("# warning: ", 0) == 0) {
        m.warnings.push_back(line.substr(11));
      }
      continue;
    }
    auto f = detail::split_tabs(line);
    if (f.size() != 4) throw ParseError("manifest rows need 4 tab-separated fields", line_no, "line");
    try {
      m.records.push_back({f[0], f[1], f[1], parse_label(f[2])});
      m.assignment.push_back(parse_partition(f[3]));
    } catch (const InputError& e) {
      throw ParseError(e.what(), line_no, "line");
    }
  }
  return m;
}

inline SplitManifest read_manifest(const std::filesystem::path& p) {
  auto in = detail::open_in(p);
  return read_manifest(in);
}

inline void write_manifest(const SplitManifest& m, const std::filesystem::path& p) {
  auto out = detail::open_out(p);
  write_manifest(m, out);
}

inline nlohmann::json stats_json(const DistributionStats& s) {
  nlohmann::json j;
  j["positives"] = s.positives;
  j["distinct_targets"] = s.distinct_targets;
  j["distinct_ligands"] = s.distinct_ligands;
  j["histogram"] = nlohmann::json::array();
  for (const auto& b : s.histogram) j["histogram"].push_back({{"lo", b.lo}, {"hi", b.hi}, {"targets", b.targets}});
  j["top"] = nlohmann::json::array();
  for (const auto& t : s.top) j["top"].push_back({{"target_id", t.target_id}, {"count", t.count}});
  return j;
}

inline nlohmann::json manifest_stats_json(const SplitManifest& m) {
  nlohmann::json j;
  j["protocol"] = std::string(to_string(m.protocol));
  j["seed"] = m.seed;
  const auto c = m.counts();
  j["counts"] = {{"train", c[0]}, {"val", c[1]}, {"test", c[2]}};
  std::size_t pos[3] = {0, 0, 0};
  for (std::size_t i = 0; i < m.records.size(); ++i)
    if (m.records[i].label == Label::positive) ++pos[static_cast<int>(m.assignment[i])];
  j["positives"] = {{"train", pos[0]}, {"val", pos[1]}, {"test", pos[2]}};
  j["warnings"] = m.warnings;
  return j;
}

}  // namespace gpcrfilter::dataset
