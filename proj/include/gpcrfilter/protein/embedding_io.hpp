#pragma once

// Per-residue embedding files (<id>.emb), little-endian:
//
//   bytes 0-5   magic "GFEMB1"
//   u32         rows  (residues)
//   u32         width (h_t)
//   f32 x rows*width, row-major
//
// Nothing may follow the payload.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "gpcrfilter/error.hpp"

namespace gpcrfilter::protein {

inline constexpr std::array<char, 6> kEmbeddingMagic{'G', 'F', 'E', 'M', 'B', '1'};

struct EmbeddingMatrix {
  std::string protein_id;
  std::uint32_t rows = 0;
  std::uint32_t width = 0;
  std::vector<float> values;  // rows * width

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(values).subspan(i * width, width);
  }
  float at(std::size_t r, std::size_t c) const { return values[r * width + c]; }
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}

inline std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
         (std::uint32_t(p[3]) << 24);
}

}  // namespace detail

inline std::string encode_embeddings(const EmbeddingMatrix& m) {
  if (m.values.size() != std::size_t(m.rows) * m.width)
    throw InvariantError("embedding matrix value count does not match rows x width");
  std::string out(kEmbeddingMagic.begin(), kEmbeddingMagic.end());
  detail::put_u32(out, m.rows);
  detail::put_u32(out, m.width);
  out.reserve(out.size() + m.values.size() * 4);
  for (float f : m.values) detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

inline EmbeddingMatrix decode_embeddings(std::string_view bytes, std::string protein_id = {}) {
  constexpr std::size_t header = 6 + 4 + 4;
  if (bytes.size() < 6 || std::memcmp(bytes.data(), kEmbeddingMagic.data(), 6) != 0)
    throw InputError("embedding file: bad magic");
  if (bytes.size() < header) throw InputError("embedding file: truncated header");
  auto p = reinterpret_cast<const unsigned char*>(bytes.data());
  EmbeddingMatrix m;
  m.protein_id = std::move(protein_id);
  m.rows = detail::get_u32(p + 6);
  m.width = detail::get_u32(p + 10);
  const std::size_t expected = std::size_t(m.rows) * m.width * 4;
  const std::size_t payload = bytes.size() - header;
  if (payload < expected) throw InputError("embedding file: truncated payload");
  if (payload > expected)
    throw InputError("embedding file: row-count mismatch vs header (" + std::to_string(payload - expected) +
                     " trailing bytes)");
  m.values.resize(std::size_t(m.rows) * m.width);
  for (std::size_t i = 0; i < m.values.size(); ++i)
    m.values[i] = std::bit_cast<float>(detail::get_u32(p + header + 4 * i));
  return m;
}

inline void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  const std::string bytes = encode_embeddings(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write embedding file: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing embedding file: " + path.string());
}

// The protein id is taken from the file stem.
inline EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open embedding file: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_embeddings(bytes, path.stem().string());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

inline std::filesystem::path embedding_path(const std::filesystem::path& dir, const std::string& id) {
  return dir / (id + ".emb");
}

// Dataset-assembly check: one embedding row per residue.
inline void require_rows_match(const EmbeddingMatrix& m, std::size_t sequence_length) {
  if (m.rows != sequence_length)
    throw InputError("embedding rows (" + std::to_string(m.rows) + ") != sequence length (" +
                     std::to_string(sequence_length) + ") for " + m.protein_id);
}

}  // namespace gpcrfilter::protein
