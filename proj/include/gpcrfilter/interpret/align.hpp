#pragma once

// Global (Needleman-Wunsch) alignment of a receptor sequence to the residues
// of one PDB chain: match +1, mismatch -1, gap -1. Traceback prefers the
// diagonal, then a gap in the chain, then a gap in the query.

#include <algorithm>
#include <sstream>
#include <string>
#include <vector>

#include "gpcrfilter/error.hpp"

namespace gpcrfilter::interpret {

inline constexpr double kMinAlignmentIdentity = 0.30;

struct Alignment {
  std::vector<int> query_to_target;  // -1 where the query position is unaligned
  int score = 0;
  int matches = 0;
  int mismatches = 0;
  int gaps = 0;
  // matches / length of the shorter sequence
  double identity = 0;
};

inline Alignment global_align(const std::string& query, const std::string& target) {
  const int n = static_cast<int>(query.size()), m = static_cast<int>(target.size());
  const int w = m + 1;
  std::vector<int> H(static_cast<std::size_t>(n + 1) * w);
  for (int i = 0; i <= n; ++i) H[i * w] = -i;
  for (int j = 0; j <= m; ++j) H[j] = -j;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= m; ++j) {
      const int diag = H[(i - 1) * w + j - 1] + (query[i - 1] == target[j - 1] ? 1 : -1);
      H[i * w + j] = std::max({diag, H[(i - 1) * w + j] - 1, H[i * w + j - 1] - 1});
    }

  Alignment a;
  a.score = H[n * w + m];
  a.query_to_target.assign(n, -1);
  int i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && H[i * w + j] == H[(i - 1) * w + j - 1] + (query[i - 1] == target[j - 1] ? 1 : -1)) {
      a.query_to_target[i - 1] = j - 1;
      (query[i - 1] == target[j - 1] ? a.matches : a.mismatches) += 1;
      --i;
      --j;
    } else if (i > 0 && H[i * w + j] == H[(i - 1) * w + j] - 1) {
      ++a.gaps;
      --i;
    } else {
      ++a.gaps;
      --j;
    }
  }
  const int shorter = std::min(n, m);
  a.identity = shorter > 0 ? static_cast<double>(a.matches) / shorter : 0.0;
  return a;
}

// Aligns and refuses poor matches, which usually mean the wrong chain.
inline Alignment align_to_chain(const std::string& query, const std::string& chain_sequence,
                                double min_identity = kMinAlignmentIdentity) {
  if (query.empty() || chain_sequence.empty()) throw InputError("cannot align an empty sequence");
  Alignment a = global_align(query, chain_sequence);
  if (a.identity < min_identity) {
    std::ostringstream msg;
    msg << "sequence does not match the chain: identity " << a.identity * 100 << "% below "
        << min_identity * 100 << "% (" << a.matches << " matches, " << a.mismatches << " mismatches, " << a.gaps
        << " gaps over lengths " << query.size() << " and " << chain_sequence.size() << ")";
    throw InputError(msg.str());
  }
  return a;
}

}  // namespace gpcrfilter::interpret
