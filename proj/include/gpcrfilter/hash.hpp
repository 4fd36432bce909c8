#pragma once

// The single 64-bit mixing function used everywhere a stable hash is needed:
// fingerprint bit positions, the stub protein embedder and file digests.
//
//   mix64(x)        splitmix64 finalizer
//   combine(h, v)   mix64(h ^ (v + 0x9e3779b97f4a7c15 + (h << 6) + (h >> 2)))
//
// Both are fixed forever; changing them changes every fingerprint on disk.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <string_view>

#include "gpcrfilter/error.hpp"

namespace gpcrfilter {

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) noexcept {
  return mix64(h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2)));
}

inline std::uint64_t hash_bytes(std::string_view bytes, std::uint64_t seed = 0) noexcept {
  std::uint64_t h = mix64(seed ^ bytes.size());
  std::size_t i = 0;
  for (; i + 8 <= bytes.size(); i += 8) {
    std::uint64_t word = 0;
    for (int b = 0; b < 8; ++b)
      word |= std::uint64_t(static_cast<unsigned char>(bytes[i + b])) << (8 * b);
    h = hash_combine(h, word);
  }
  std::uint64_t tail = 0;
  for (int b = 0; i < bytes.size(); ++i, ++b)
    tail |= std::uint64_t(static_cast<unsigned char>(bytes[i])) << (8 * b);
  return hash_combine(h, tail);
}

inline std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Content digest of a file, hex-encoded. Used by run manifests and stage caching.
inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file for digest: " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return to_hex(hash_bytes(data));
}

}  // namespace gpcrfilter
