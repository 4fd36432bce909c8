#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>

namespace gpcrfilter::chem {

struct ElementInfo {
  std::string_view symbol;
  int atomic_number;
  double mass;
  // Allowed valences for implicit-hydrogen inference, ascending; empty when the
  // element is never written outside brackets.
  std::array<int, 3> valences;
  int valence_count;
  bool organic_subset;
};

// The supported element set. Its order is also the element one-hot order in
// the atom feature layout.
inline constexpr std::array<ElementInfo, 16> kElements{{
    {"H", 1, 1.008, {1, 0, 0}, 1, false},
    {"Li", 3, 6.94, {1, 0, 0}, 1, false},
    {"B", 5, 10.81, {3, 0, 0}, 1, true},
    {"C", 6, 12.011, {4, 0, 0}, 1, true},
    {"N", 7, 14.007, {3, 5, 0}, 2, true},
    {"O", 8, 15.999, {2, 0, 0}, 1, true},
    {"F", 9, 18.998, {1, 0, 0}, 1, true},
    {"Na", 11, 22.990, {1, 0, 0}, 1, false},
    {"Si", 14, 28.085, {4, 0, 0}, 1, false},
    {"P", 15, 30.974, {3, 5, 0}, 2, true},
    {"S", 16, 32.06, {2, 4, 6}, 3, true},
    {"Cl", 17, 35.45, {1, 0, 0}, 1, true},
    {"K", 19, 39.098, {1, 0, 0}, 1, false},
    {"Se", 34, 78.971, {2, 4, 6}, 3, false},
    {"Br", 35, 79.904, {1, 0, 0}, 1, true},
    {"I", 53, 126.904, {1, 0, 0}, 1, true},
}};

// Index into kElements, or nullopt for an unsupported symbol.
inline std::optional<int> element_index(std::string_view symbol) {
  for (int i = 0; i < static_cast<int>(kElements.size()); ++i)
    if (kElements[i].symbol == symbol) return i;
  return std::nullopt;
}

inline const ElementInfo& element(int index) { return kElements.at(index); }

// Elements that may appear in lowercase aromatic form.
inline bool aromatic_capable(std::string_view symbol) {
  return symbol == "B" || symbol == "C" || symbol == "N" || symbol == "O" ||
         symbol == "P" || symbol == "S" || symbol == "Se";
}

}  // namespace gpcrfilter::chem
