#pragma once

#include <cctype>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gpcrfilter/error.hpp"

namespace gpcrfilter::protein {

struct ProteinRecord {
  std::string id;
  std::string sequence;  // uppercase, over ACDEFGHIKLMNPQRSTVWY plus X
};

inline bool valid_residue(char c) {
  static constexpr std::string_view kAlphabet = "ACDEFGHIKLMNPQRSTVWYX";
  return kAlphabet.find(c) != std::string_view::npos;
}

// Records in file order. The id is the header text up to the first whitespace;
// sequence lines are concatenated and uppercased, a trailing '*' is dropped.
inline std::vector<ProteinRecord> parse_fasta(std::istream& in) {
  std::vector<ProteinRecord> records;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::size_t> header_lines;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '>') {
      const auto end = line.find_first_of(" \t", 1);
      std::string id = line.substr(1, end == std::string::npos ? std::string::npos : end - 1);
      if (id.empty()) throw ParseError("FASTA header without id", line_no, "line");
      if (!ids.insert(id).second) throw ParseError("duplicate FASTA id '" + id + "'", line_no, "line");
      records.push_back({id, {}});
      header_lines.push_back(line_no);
      continue;
    }
    if (records.empty()) throw ParseError("sequence before any FASTA header", line_no, "line");
    for (char c : line) {
      if (std::isspace(static_cast<unsigned char>(c))) continue;
      if (c == '*') continue;
      const char u = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (!valid_residue(u))
        throw ParseError(std::string("invalid residue letter '") + c + "' in " + records.back().id, line_no, "line");
      records.back().sequence += u;
    }
  }
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].sequence.empty())
      throw ParseError("empty sequence for FASTA id '" + records[i].id + "'", header_lines[i], "line");
  return records;
}

inline std::vector<ProteinRecord> parse_fasta(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_fasta(in);
}

}  // namespace gpcrfilter::protein
