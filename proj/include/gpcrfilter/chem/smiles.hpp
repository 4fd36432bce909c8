#pragma once

// SMILES reading and writing.
//
// Dialect: organic subset atoms, bracket atoms with isotope / H count / charge
// / atom class, branches, ring closures (digits and %nn), bonds - = # : / \ and
// '.' disconnections. Isotopes, atom classes, chirality (@, @@, @TH1 ...) and
// directional bonds are accepted and discarded. Lowercase atoms are trusted as
// aromatic but must end up on a ring.

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gpcrfilter/chem/elements.hpp"
#include "gpcrfilter/chem/features.hpp"
#include "gpcrfilter/chem/molgraph.hpp"
#include "gpcrfilter/chem/rings.hpp"
#include "gpcrfilter/error.hpp"

namespace gpcrfilter::chem {

namespace detail {

class SmilesParser {
 public:
  explicit SmilesParser(std::string_view text) : s_(text) {}

  MolGraph parse() {
    if (s_.empty()) throw ParseError("empty SMILES", 0);
    g_.source_smiles = std::string(s_);
    int prev = -1;
    std::optional<BondOrder> pending_bond;
    std::size_t pending_bond_pos = 0;
    std::vector<int> branch_stack;
    std::vector<std::size_t> branch_pos;
    bool dot_pending = false;

    while (i_ < s_.size()) {
      const char c = s_[i_];
      if (c == '(') {
        if (prev < 0) throw ParseError("branch without preceding atom", i_);
        if (pending_bond) throw ParseError("bond before branch", pending_bond_pos);
        branch_stack.push_back(prev);
        branch_pos.push_back(i_);
        ++i_;
        continue;
      }
      if (c == ')') {
        if (branch_stack.empty()) throw ParseError("unmatched ')'", i_);
        if (pending_bond) throw ParseError("dangling bond", pending_bond_pos);
        prev = branch_stack.back();
        branch_stack.pop_back();
        branch_pos.pop_back();
        ++i_;
        continue;
      }
      if (c == '.') {
        if (pending_bond) throw ParseError("dangling bond", pending_bond_pos);
        if (prev < 0) throw ParseError("'.' without preceding atom", i_);
        dot_pending = true;
        ++i_;
        continue;
      }
      if (auto order = bond_symbol(c)) {
        if (pending_bond) throw ParseError("consecutive bond symbols", i_);
        if (prev < 0 || dot_pending) throw ParseError("bond without preceding atom", i_);
        pending_bond = *order;
        pending_bond_pos = i_;
        ++i_;
        continue;
      }
      if (c == '$') throw ParseError("quadruple bonds are not supported", i_);
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '%') {
        if (prev < 0 || dot_pending) throw ParseError("ring closure without atom", i_);
        const std::size_t at = i_;
        const int number = ring_number();
        ring_closure(prev, number, at, pending_bond);
        pending_bond.reset();
        continue;
      }
      const std::size_t at = i_;
      const int atom = (c == '[') ? bracket_atom() : organic_atom();
      if (prev >= 0 && !dot_pending) {
        add_bond(prev, atom, resolve(pending_bond, prev, atom), at);
      }
      pending_bond.reset();
      dot_pending = false;
      prev = atom;
    }

    if (pending_bond) throw ParseError("dangling bond", pending_bond_pos);
    if (dot_pending) throw ParseError("trailing '.'", s_.size() - 1);
    if (!branch_stack.empty()) throw ParseError("unclosed branch", branch_pos.back());
    if (!open_rings_.empty()) {
      throw ParseError("unclosed ring " + std::to_string(open_rings_.begin()->first),
                       open_rings_.begin()->second.position);
    }
    finish();
    return std::move(g_);
  }

 private:
  struct OpenRing {
    int atom;
    std::optional<BondOrder> order;
    std::size_t position;
  };

  static std::optional<BondOrder> bond_symbol(char c) {
    switch (c) {
      case '-':
      case '/':
      case '\\':
        return BondOrder::single;
      case '=':
        return BondOrder::double_;
      case '#':
        return BondOrder::triple;
      case ':':
        return BondOrder::aromatic;
      default:
        return std::nullopt;
    }
  }

  // An unspecified bond between two aromatic atoms is aromatic; it is demoted to
  // single in finish() when it turns out not to be on a ring.
  BondOrder resolve(std::optional<BondOrder> order, int a, int b) {
    if (order) return *order;
    return (g_.atoms[a].aromatic && g_.atoms[b].aromatic) ? BondOrder::aromatic
                                                          : BondOrder::single;
  }

  int ring_number() {
    if (s_[i_] == '%') {
      if (i_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[i_ + 1])) ||
          !std::isdigit(static_cast<unsigned char>(s_[i_ + 2])))
        throw ParseError("malformed %nn ring closure", i_);
      const int n = (s_[i_ + 1] - '0') * 10 + (s_[i_ + 2] - '0');
      i_ += 3;
      return n;
    }
    return s_[i_++] - '0';
  }

  void ring_closure(int atom, int number, std::size_t at, std::optional<BondOrder> order) {
    auto it = open_rings_.find(number);
    if (it == open_rings_.end()) {
      open_rings_[number] = {atom, order, at};
      return;
    }
    const OpenRing open = it->second;
    open_rings_.erase(it);
    if (open.atom == atom) throw ParseError("ring closure to the same atom", at);
    if (open.order && order && *open.order != *order)
      throw ParseError("conflicting ring-closure bond orders", at);
    std::optional<BondOrder> chosen = order ? order : open.order;
    add_bond(open.atom, atom, resolve(chosen, open.atom, atom), at);
  }

  void add_bond(int a, int b, BondOrder order, std::size_t at) {
    for (const Bond& existing : g_.bonds)
      if ((existing.a == a && existing.b == b) || (existing.a == b && existing.b == a))
        throw ParseError("duplicate bond", at);
    g_.bonds.push_back({a, b, order, false});
  }

  int push_atom(Atom atom) {
    g_.atoms.push_back(atom);
    return g_.atom_count() - 1;
  }

  int organic_atom() {
    const std::size_t at = i_;
    const char c = s_[i_];
    std::string symbol;
    bool aromatic = false;
    if ((c == 'C' || c == 'B') && i_ + 1 < s_.size() &&
        ((c == 'C' && s_[i_ + 1] == 'l') || (c == 'B' && s_[i_ + 1] == 'r'))) {
      symbol = std::string{c, s_[i_ + 1]};
      i_ += 2;
    } else if (c == 'B' || c == 'C' || c == 'N' || c == 'O' || c == 'P' || c == 'S' ||
               c == 'F' || c == 'I') {
      symbol = std::string{c};
      ++i_;
    } else if (c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' || c == 's') {
      symbol = std::string{static_cast<char>(std::toupper(c))};
      aromatic = true;
      ++i_;
    } else if (c == '*') {
      throw ParseError("wildcard atom '*' is not supported", at);
    } else {
      throw ParseError(std::string("unknown element symbol '") + c + "'", at);
    }
    Atom atom;
    atom.element = *element_index(symbol);
    atom.aromatic = aromatic;
    atom.source_offset = at;
    return push_atom(atom);
  }

  int bracket_atom() {
    const std::size_t open = i_;
    ++i_;  // '['
    auto peek = [&]() -> char { return i_ < s_.size() ? s_[i_] : '\0'; };
    while (std::isdigit(static_cast<unsigned char>(peek()))) ++i_;  // isotope

    const std::size_t sym_at = i_;
    std::string symbol;
    bool aromatic = false;
    const char c = peek();
    if (c == '\0') throw ParseError("unterminated bracket atom", open);
    if (std::islower(static_cast<unsigned char>(c))) {
      // Aromatic: se, as (unsupported), or single letter.
      if (c == 's' && i_ + 1 < s_.size() && s_[i_ + 1] == 'e') {
        symbol = "Se";
        i_ += 2;
      } else {
        symbol = std::string{static_cast<char>(std::toupper(c))};
        ++i_;
      }
      aromatic = true;
      if (!aromatic_capable(symbol))
        throw ParseError("element cannot be aromatic: " + symbol, sym_at);
    } else if (std::isupper(static_cast<unsigned char>(c))) {
      symbol = std::string{c};
      ++i_;
      // Inside brackets a lowercase letter after the capital is always part of
      // the symbol.
      if (std::islower(static_cast<unsigned char>(peek()))) symbol += s_[i_++];
    } else {
      throw ParseError("expected element symbol in bracket atom", sym_at);
    }
    auto idx = element_index(symbol);
    if (!idx) throw ParseError("unknown element symbol '" + symbol + "'", sym_at);

    // Chirality: @, @@, @TH1, @AL2, @SP3, @TB12, @OH25.
    if (peek() == '@') {
      ++i_;
      if (peek() == '@') {
        ++i_;
      } else if (i_ + 2 < s_.size()) {
        const std::string_view cls = s_.substr(i_, 2);
        if (cls == "TH" || cls == "AL" || cls == "SP" || cls == "TB" || cls == "OH") {
          i_ += 2;
          while (std::isdigit(static_cast<unsigned char>(peek()))) ++i_;
        }
      }
    }
    int hcount = 0;
    if (peek() == 'H') {
      ++i_;
      hcount = 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) hcount = s_[i_++] - '0';
    }
    int charge = 0;
    if (peek() == '+' || peek() == '-') {
      const char sign = s_[i_++];
      int magnitude = 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        magnitude = 0;
        while (std::isdigit(static_cast<unsigned char>(peek()))) magnitude = magnitude * 10 + (s_[i_++] - '0');
      } else {
        while (peek() == sign) ++magnitude, ++i_;
      }
      charge = sign == '+' ? magnitude : -magnitude;
    }
    if (peek() == ':') {
      ++i_;
      if (!std::isdigit(static_cast<unsigned char>(peek()))) throw ParseError("malformed atom class", i_);
      while (std::isdigit(static_cast<unsigned char>(peek()))) ++i_;
    }
    if (peek() != ']') throw ParseError("unterminated bracket atom", open);
    ++i_;

    Atom atom;
    atom.element = *idx;
    atom.aromatic = aromatic;
    atom.bracket = true;
    atom.explicit_h = hcount;
    atom.formal_charge = charge;
    atom.source_offset = open;
    return push_atom(atom);
  }

  // Folds neutral single-bonded [H] atoms into their heavy neighbour, resolves
  // rings, aromatic bonds and implicit hydrogens.
  void finish() {
    fold_explicit_hydrogens();
    g_.rebuild_adjacency();
    mark_rings(g_);
    for (Bond& b : g_.bonds)
      if (b.order == BondOrder::aromatic && !b.in_ring) b.order = BondOrder::single;
    for (const Atom& a : g_.atoms)
      if (a.aromatic && !a.in_ring) throw ParseError("aromatic atom outside a ring", a.source_offset);
    for (int i = 0; i < g_.atom_count(); ++i) {
      Atom& a = g_.atoms[i];
      a.implicit_h = a.bracket ? 0 : implicit_hydrogens(a, bond_valence_sum(g_, i));
    }
    featurize_in_place(g_);
  }

  void fold_explicit_hydrogens() {
    const int h = *element_index("H");
    g_.rebuild_adjacency();
    std::vector<char> drop(g_.atoms.size(), 0);
    for (int i = 0; i < g_.atom_count(); ++i) {
      const Atom& a = g_.atoms[i];
      if (a.element != h || a.formal_charge != 0 || a.explicit_h != 0 || a.aromatic) continue;
      if (g_.adjacency[i].size() != 1) continue;
      auto [nb, bi] = g_.adjacency[i][0];
      if (g_.atoms[nb].element == h || g_.bonds[bi].order != BondOrder::single) continue;
      drop[i] = 1;
      if (g_.atoms[nb].bracket) g_.atoms[nb].explicit_h += 1;
    }
    if (std::none_of(drop.begin(), drop.end(), [](char d) { return d != 0; })) return;
    std::vector<int> remap(g_.atoms.size(), -1);
    std::vector<Atom> atoms;
    for (int i = 0; i < g_.atom_count(); ++i) {
      if (drop[i]) continue;
      remap[i] = static_cast<int>(atoms.size());
      atoms.push_back(g_.atoms[i]);
    }
    std::vector<Bond> bonds;
    for (const Bond& b : g_.bonds) {
      if (drop[b.a] || drop[b.b]) continue;
      bonds.push_back({remap[b.a], remap[b.b], b.order, false});
    }
    g_.atoms = std::move(atoms);
    g_.bonds = std::move(bonds);
  }

  std::string_view s_;
  std::size_t i_ = 0;
  MolGraph g_;
  std::map<int, OpenRing> open_rings_;
};

inline std::string atom_token(const MolGraph& g, int i) {
  const Atom& a = g.atoms[i];
  const ElementInfo& info = a.info();
  std::string symbol(info.symbol);
  if (a.aromatic) {
    symbol[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(symbol[0])));
  }
  const bool organic_ok = info.organic_subset && a.formal_charge == 0 &&
                          (!a.aromatic || symbol == "b" || symbol == "c" || symbol == "n" ||
                           symbol == "o" || symbol == "p" || symbol == "s");
  if (organic_ok) {
    Atom probe = a;
    probe.bracket = false;
    if (implicit_hydrogens(probe, bond_valence_sum(g, i)) == a.total_h()) return symbol;
  }
  std::string out = "[" + symbol;
  const int h = a.total_h();
  if (h > 0) out += "H" + (h > 1 ? std::to_string(h) : std::string());
  if (a.formal_charge != 0) {
    out += a.formal_charge > 0 ? '+' : '-';
    const int m = a.formal_charge > 0 ? a.formal_charge : -a.formal_charge;
    if (m > 1) out += std::to_string(m);
  }
  return out + "]";
}

inline std::string bond_token(const MolGraph& g, const Bond& b) {
  const bool both_aromatic = g.atoms[b.a].aromatic && g.atoms[b.b].aromatic;
  switch (b.order) {
    case BondOrder::single:
      return both_aromatic ? "-" : "";
    case BondOrder::double_:
      return "=";
    case BondOrder::triple:
      return "#";
    case BondOrder::aromatic:
      return both_aromatic ? "" : ":";
  }
  return "";
}

inline std::string ring_label(int n) {
  return n < 10 ? std::to_string(n) : "%" + std::to_string(n);
}

}  // namespace detail

// Parses one SMILES string. Errors carry the byte offset of the offending token.
inline MolGraph parse_smiles(std::string_view smiles) {
  return detail::SmilesParser(smiles).parse();
}

// Writes the connected component containing `start` by depth-first traversal.
// Neighbours are visited in ascending `priority`; ring-closure digits are the
// lowest free number. Returns the text and marks visited atoms.
inline std::string write_component(const MolGraph& g, int start, const std::vector<int>& priority,
                                   std::vector<char>& visited) {
  const int n = g.atom_count();
  auto sorted_neighbours = [&](int v) {
    auto nbs = g.adjacency[v];
    std::sort(nbs.begin(), nbs.end(),
              [&](const auto& x, const auto& y) { return priority[x.first] < priority[y.first]; });
    return nbs;
  };

  // Pass 1: DFS tree, visit order and ring-closure bonds.
  std::vector<int> order_index(n, -1);
  std::vector<int> parent_bond(n, -1);
  std::vector<std::vector<int>> children(n);
  std::vector<char> is_tree_bond(g.bond_count(), 0);
  int counter = 0;
  {
    struct Frame {
      int atom;
      std::vector<std::pair<int, int>> nbs;
      std::size_t next;
    };
    std::vector<Frame> stack;
    order_index[start] = counter++;
    stack.push_back({start, sorted_neighbours(start), 0});
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next == f.nbs.size()) {
        stack.pop_back();
        continue;
      }
      auto [nb, bi] = f.nbs[f.next++];
      if (order_index[nb] >= 0) continue;
      order_index[nb] = counter++;
      parent_bond[nb] = bi;
      is_tree_bond[bi] = 1;
      children[f.atom].push_back(nb);
      const int next_atom = nb;
      stack.push_back({next_atom, sorted_neighbours(next_atom), 0});
    }
  }
  // Ring bonds per atom, ordered by the partner's visit order.
  std::vector<std::vector<int>> ring_bonds(n);
  for (int bi = 0; bi < g.bond_count(); ++bi) {
    const Bond& b = g.bonds[bi];
    if (is_tree_bond[bi] || order_index[b.a] < 0) continue;
    ring_bonds[b.a].push_back(bi);
    ring_bonds[b.b].push_back(bi);
  }
  for (int v = 0; v < n; ++v) {
    std::sort(ring_bonds[v].begin(), ring_bonds[v].end(), [&](int x, int y) {
      return order_index[g.bonds[x].other(v)] < order_index[g.bonds[y].other(v)];
    });
  }

  // Pass 2: emit.
  std::string out;
  std::vector<int> ring_digit(g.bond_count(), -1);
  std::vector<char> digit_used(100, 0);
  auto emit = [&](auto&& self, int v) -> void {
    visited[v] = 1;
    out += detail::atom_token(g, v);
    for (int bi : ring_bonds[v]) {
      const int partner = g.bonds[bi].other(v);
      if (ring_digit[bi] >= 0) {
        out += detail::ring_label(ring_digit[bi]);
        digit_used[ring_digit[bi]] = 0;
      } else if (order_index[partner] > order_index[v]) {
        int d = 1;
        while (d < 100 && digit_used[d]) ++d;
        if (d == 100) throw InvariantError("more than 99 open ring closures");
        digit_used[d] = 1;
        ring_digit[bi] = d;
        out += detail::bond_token(g, g.bonds[bi]) + detail::ring_label(d);
      }
    }
    const auto& kids = children[v];
    for (std::size_t k = 0; k < kids.size(); ++k) {
      const bool last = k + 1 == kids.size();
      if (!last) out += '(';
      out += detail::bond_token(g, g.bonds[parent_bond[kids[k]]]);
      self(self, kids[k]);
      if (!last) out += ')';
    }
  };
  emit(emit, start);
  return out;
}

// Writes a SMILES for the whole graph. Components are emitted in ascending
// priority of their lowest-priority atom.
inline std::string write_smiles(const MolGraph& g, const std::vector<int>& priority) {
  std::vector<int> atoms(g.atom_count());
  for (int i = 0; i < g.atom_count(); ++i) atoms[i] = i;
  std::sort(atoms.begin(), atoms.end(), [&](int x, int y) { return priority[x] < priority[y]; });
  std::vector<char> visited(g.atom_count(), 0);
  std::string out;
  for (int a : atoms) {
    if (visited[a]) continue;
    if (!out.empty()) out += '.';
    out += write_component(g, a, priority, visited);
  }
  return out;
}

inline std::string write_smiles(const MolGraph& g) {
  std::vector<int> priority(g.atom_count());
  for (int i = 0; i < g.atom_count(); ++i) priority[i] = i;
  return write_smiles(g, priority);
}

}  // namespace gpcrfilter::chem
