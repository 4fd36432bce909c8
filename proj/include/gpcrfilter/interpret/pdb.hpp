#pragma once

// Fixed-column PDB reader for ATOM / HETATM records of the first model.
// Hydrogens are dropped, alternate locations other than blank and 'A' are
// skipped, and insertion codes keep residues distinct.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gpcrfilter/error.hpp"

namespace gpcrfilter::interpret {

struct Point3 {
  double x = 0, y = 0, z = 0;
};

inline double squared_distance(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

struct PdbAtom {
  std::string name;
  std::string element;
  Point3 position;
};

struct PdbResidue {
  std::string name;   // three-letter
  char chain = ' ';
  int number = 0;     // author residue number
  char insertion = ' ';
  bool hetero = false;
  std::vector<PdbAtom> atoms;

  // Author label, e.g. "100" or "100A".
  std::string label() const {
    std::string s = std::to_string(number);
    if (insertion != ' ') s += insertion;
    return s;
  }
};

struct PdbChain {
  char id = ' ';
  std::vector<PdbResidue> residues;  // polymer (ATOM) residues in file order
};

struct PdbStructure {
  std::vector<PdbChain> chains;
  std::vector<PdbResidue> hetero;  // HETATM residues in file order

  const PdbChain& chain(char id) const {
    for (const auto& c : chains)
      if (c.id == id) return c;
    throw InputError(std::string("chain '") + id + "' not found in structure");
  }

  // Heavy atoms of every HETATM residue with this name, optionally limited
  // to one chain.
  std::vector<Point3> ligand_atoms(const std::string& resname, std::optional<char> chain_id = {}) const {
    std::vector<Point3> out;
    for (const auto& r : hetero) {
      if (r.name != resname) continue;
      if (chain_id && r.chain != *chain_id) continue;
      for (const auto& a : r.atoms) out.push_back(a.position);
    }
    if (out.empty()) throw InputError("no HETATM residue named '" + resname + "' in structure");
    return out;
  }
};

namespace detail {

inline std::string_view columns(std::string_view line, std::size_t first, std::size_t last) {
  // 1-based inclusive columns, clipped to the line.
  if (line.size() < first) return {};
  return line.substr(first - 1, std::min(last, line.size()) - first + 1);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(' ');
  if (b == std::string_view::npos) return {};
  return std::string(s.substr(b, s.find_last_not_of(' ') - b + 1));
}

inline double parse_coordinate(std::string_view field, const char* what, std::size_t line_no) {
  const std::string t = trim(field);
  double v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size() || !std::isfinite(v))
    throw ParseError(std::string("malformed ") + what + " coordinate '" + t + "'", line_no, "line");
  return v;
}

// Columns 77-78 when present, otherwise the atom name: element symbols are
// right-justified in columns 13-14, so a blank (or digit) column 13 means a
// one-letter element in column 14. Four-character names starting in column 13
// with 'H' are hydrogens.
inline std::string infer_element(std::string_view line) {
  std::string e = trim(columns(line, 77, 78));
  if (e.empty()) {
    const std::string_view name = columns(line, 13, 16);
    if (name.size() >= 2 && (name[0] == ' ' || std::isdigit(static_cast<unsigned char>(name[0])))) {
      e = std::string(1, name[1]);
    } else if (!name.empty() && (name[0] == 'H' || name[0] == 'h') && trim(name).size() == 4) {
      e = "H";
    } else {
      for (char c : name.substr(0, 2))
        if (std::isalpha(static_cast<unsigned char>(c))) e += c;
    }
  }
  for (auto& c : e) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return e;
}

}  // namespace detail

inline PdbStructure parse_pdb(std::istream& in) {
  PdbStructure s;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string_view line(raw);
    const std::string record = detail::trim(detail::columns(line, 1, 6));
    if (record == "ENDMDL") break;
    if (record != "ATOM" && record != "HETATM") continue;
    if (line.size() < 54) throw ParseError(record + " record shorter than 54 columns", line_no, "line");

    const char altloc = line[16];
    if (altloc != ' ' && altloc != 'A') continue;
    const std::string element = detail::infer_element(line);
    if (element == "H" || element == "D") continue;

    PdbResidue key;
    key.name = detail::trim(detail::columns(line, 18, 20));
    key.chain = line[21];
    key.hetero = record == "HETATM";
    key.insertion = line[26];
    const std::string number = detail::trim(detail::columns(line, 23, 26));
    const auto [end, ec] = std::from_chars(number.data(), number.data() + number.size(), key.number);
    if (number.empty() || ec != std::errc() || end != number.data() + number.size())
      throw ParseError("malformed residue number '" + number + "'", line_no, "line");
    if (key.name.empty()) throw ParseError("missing residue name", line_no, "line");

    PdbAtom atom;
    atom.name = detail::trim(detail::columns(line, 13, 16));
    atom.element = element;
    atom.position = {detail::parse_coordinate(detail::columns(line, 31, 38), "x", line_no),
                     detail::parse_coordinate(detail::columns(line, 39, 46), "y", line_no),
                     detail::parse_coordinate(detail::columns(line, 47, 54), "z", line_no)};

    std::vector<PdbResidue>* list = nullptr;
    if (key.hetero) {
      list = &s.hetero;
    } else {
      auto it = std::find_if(s.chains.begin(), s.chains.end(), [&](const PdbChain& c) { return c.id == key.chain; });
      if (it == s.chains.end()) {
        s.chains.push_back({key.chain, {}});
        it = s.chains.end() - 1;
      }
      list = &it->residues;
    }
    const bool same = !list->empty() && list->back().chain == key.chain && list->back().number == key.number &&
                      list->back().insertion == key.insertion && list->back().name == key.name;
    if (!same) list->push_back(key);
    list->back().atoms.push_back(atom);
  }
  return s;
}

inline PdbStructure parse_pdb(const std::string& text) {
  std::istringstream in(text);
  return parse_pdb(in);
}

inline PdbStructure read_pdb(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return parse_pdb(in);
  } catch (const ParseError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

inline char one_letter(const std::string& three) {
  static const std::array<std::pair<const char*, char>, 22> table{{
      {"ALA", 'A'}, {"ARG", 'R'}, {"ASN", 'N'}, {"ASP", 'D'}, {"CYS", 'C'}, {"GLN", 'Q'},
      {"GLU", 'E'}, {"GLY", 'G'}, {"HIS", 'H'}, {"ILE", 'I'}, {"LEU", 'L'}, {"LYS", 'K'},
      {"MET", 'M'}, {"PHE", 'F'}, {"PRO", 'P'}, {"SER", 'S'}, {"THR", 'T'}, {"TRP", 'W'},
      {"TYR", 'Y'}, {"VAL", 'V'}, {"MSE", 'M'}, {"SEC", 'U'}}};
  for (const auto& [name, letter] : table)
    if (three == name) return letter;
  return 'X';
}

inline std::string chain_sequence(const PdbChain& chain) {
  std::string s;
  for (const auto& r : chain.residues) s += one_letter(r.name);
  return s;
}

}  // namespace gpcrfilter::interpret
