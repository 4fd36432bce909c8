#pragma once

// Deterministic stand-in for protein language model embeddings.
//
// Row i is a function of the residues at i-2..i+2 ('^' outside the sequence)
// and i mod 17 only. Column j of the row is
//   mix64-derived value of combine(window_hash, j) mapped to [-1, 1].

#include <cstdint>

#include "gpcrfilter/error.hpp"
#include "gpcrfilter/hash.hpp"
#include "gpcrfilter/protein/embedding_io.hpp"
#include "gpcrfilter/protein/fasta.hpp"

namespace gpcrfilter::protein {

inline constexpr int kStubWindow = 2;

inline EmbeddingMatrix stub_embed(const ProteinRecord& record, std::uint32_t width) {
  if (width < 8) throw InputError("stub embedder width must be >= 8");
  const auto& seq = record.sequence;
  EmbeddingMatrix m;
  m.protein_id = record.id;
  m.rows = static_cast<std::uint32_t>(seq.size());
  m.width = width;
  m.values.resize(std::size_t(m.rows) * width);
  const long n = static_cast<long>(seq.size());
  for (long i = 0; i < n; ++i) {
    std::uint64_t h = mix64(0x5eed5eedULL);
    for (long k = i - kStubWindow; k <= i + kStubWindow; ++k) {
      const char c = (k >= 0 && k < n) ? seq[k] : '^';
      h = hash_combine(h, static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    }
    h = hash_combine(h, static_cast<std::uint64_t>(i % 17));
    for (std::uint32_t j = 0; j < width; ++j) {
      const std::uint64_t v = hash_combine(h, j);
      // 24 high bits -> [0, 1] -> [-1, 1]
      const double unit = static_cast<double>(v >> 40) / static_cast<double>((1u << 24) - 1);
      m.values[std::size_t(i) * width + j] = static_cast<float>(2.0 * unit - 1.0);
    }
  }
  return m;
}

}  // namespace gpcrfilter::protein
