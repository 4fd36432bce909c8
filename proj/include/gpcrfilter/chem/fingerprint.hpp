#pragma once

// Morgan (ECFP-style) circular fingerprints and Tanimoto distance.
//
// Radius-0 identifier per atom: hash of (atomic number, heavy degree, H count,
// formal charge, ring membership, aromaticity). Each iteration r = 1..radius
// replaces it with hash(r, previous id, sorted (bond order, neighbour id)
// pairs). Every identifier from every iteration sets bit id mod width.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gpcrfilter/chem/molgraph.hpp"
#include "gpcrfilter/error.hpp"
#include "gpcrfilter/hash.hpp"

namespace gpcrfilter::chem {

inline constexpr int kFingerprintWidth = 2048;

class Fingerprint {
 public:
  explicit Fingerprint(int width = kFingerprintWidth)
      : width_(width), words_((static_cast<std::size_t>(width) + 63) / 64, 0) {
    if (width <= 0) throw InputError("fingerprint width must be positive");
  }

  int width() const { return width_; }
  void set(int bit) { words_[bit / 64] |= std::uint64_t{1} << (bit % 64); }
  bool test(int bit) const { return (words_[bit / 64] >> (bit % 64)) & 1u; }
  std::span<const std::uint64_t> words() const { return words_; }

  int popcount() const {
    int c = 0;
    for (auto w : words_) c += std::popcount(w);
    return c;
  }

  // Lowercase hex, bit 0 in the least significant nibble of the last character.
  std::string to_hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    const int nibbles = (width_ + 3) / 4;
    std::string out(nibbles, '0');
    for (int k = 0; k < nibbles; ++k) {
      int v = 0;
      for (int b = 0; b < 4; ++b)
        if (k * 4 + b < width_ && test(k * 4 + b)) v |= 1 << b;
      out[nibbles - 1 - k] = digits[v];
    }
    return out;
  }

  std::vector<double> as_real() const {
    std::vector<double> v(width_);
    for (int i = 0; i < width_; ++i) v[i] = test(i) ? 1.0 : 0.0;
    return v;
  }

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;

 private:
  int width_;
  std::vector<std::uint64_t> words_;
};

inline std::vector<std::uint64_t> morgan_identifiers(const MolGraph& g, int radius) {
  const int n = g.atom_count();
  std::vector<std::uint64_t> ids(n);
  for (int i = 0; i < n; ++i) {
    const Atom& a = g.atoms[i];
    std::uint64_t h = mix64(static_cast<std::uint64_t>(a.info().atomic_number));
    h = hash_combine(h, static_cast<std::uint64_t>(a.degree));
    h = hash_combine(h, static_cast<std::uint64_t>(a.total_h()));
    h = hash_combine(h, static_cast<std::uint64_t>(a.formal_charge + 128));
    h = hash_combine(h, a.in_ring ? 1u : 0u);
    h = hash_combine(h, a.aromatic ? 1u : 0u);
    ids[i] = h;
  }
  std::vector<std::uint64_t> all(ids);
  for (int r = 1; r <= radius; ++r) {
    std::vector<std::uint64_t> next(n);
    for (int i = 0; i < n; ++i) {
      std::vector<std::pair<int, std::uint64_t>> env;
      for (auto [nb, bi] : g.adjacency[i]) env.emplace_back(static_cast<int>(g.bonds[bi].order), ids[nb]);
      std::sort(env.begin(), env.end());
      std::uint64_t h = hash_combine(static_cast<std::uint64_t>(r), ids[i]);
      for (auto [order, id] : env) h = hash_combine(hash_combine(h, static_cast<std::uint64_t>(order)), id);
      next[i] = h;
    }
    ids = std::move(next);
    all.insert(all.end(), ids.begin(), ids.end());
  }
  return all;
}

inline Fingerprint morgan_fingerprint(const MolGraph& g, int radius = 2, int width = kFingerprintWidth) {
  Fingerprint fp(width);
  for (std::uint64_t id : morgan_identifiers(g, radius)) fp.set(static_cast<int>(id % static_cast<std::uint64_t>(width)));
  return fp;
}

// Continuous Tanimoto distance 1 - <a,b> / (|a|^2 + |b|^2 - <a,b>). Two all-zero
// inputs are at distance 0.
inline double tanimoto_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("tanimoto_distance: width mismatch");
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  const double denom = aa + bb - ab;
  if (denom <= 0.0) return 0.0;
  return std::clamp(1.0 - ab / denom, 0.0, 1.0);
}

inline double tanimoto_distance(const Fingerprint& a, const Fingerprint& b) {
  if (a.width() != b.width()) throw InputError("tanimoto_distance: width mismatch");
  int both = 0, either = 0;
  for (std::size_t i = 0; i < a.words().size(); ++i) {
    both += std::popcount(a.words()[i] & b.words()[i]);
    either += std::popcount(a.words()[i] | b.words()[i]);
  }
  if (either == 0) return 0.0;
  return 1.0 - static_cast<double>(both) / static_cast<double>(either);
}

}  // namespace gpcrfilter::chem
