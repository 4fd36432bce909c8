#pragma once

// Weight surgery that makes the last decoder layer's graph-token query attend
// only to residues whose embedding has channel 0 set.
//
// Encoder residual branches are silenced so the memory is LayerNorm of the
// projection; the projection keeps only channel 0, so marked residues map to
// a vector with a large first component and unmarked ones to zero. The query
// is a constant bias and the key reads the first component, giving every
// head a score of strength^2 * ~sqrt(d-1) / sqrt(d_head) on marked residues
// and 0 elsewhere.

#include <set>
#include <string>

#include "gpcrfilter/model/model.hpp"
#include "gpcrfilter/protein/embedding_io.hpp"

namespace oracle {

template <class T>
void concentrate_cross_attention(gpcrfilter::model::InteractionModel<T>& m, double strength = 10.0) {
  const auto& cfg = m.config();
  const int d = cfg.hidden, dh = cfg.hidden / cfg.heads;
  auto zero = [&](const std::string& name) {
    if (auto* p = m.find(name)) p->value.fill(T(0));
  };
  for (int l = 0; l < cfg.encoder_layers; ++l) {
    const std::string p = "encoder." + std::to_string(l) + ".";
    zero(p + "self_attn.o.weight");
    zero(p + "self_attn.o.bias");
    zero(p + "ffn.out.weight");
    zero(p + "ffn.out.bias");
  }
  zero("protein_proj.weight");
  zero("protein_proj.bias");
  m.find("protein_proj.weight")->value[0] = T(1);
  m.find("encoder.norm.gamma")->value.fill(T(1));
  zero("encoder.norm.beta");

  const std::string p = "decoder." + std::to_string(cfg.decoder_layers - 1) + ".cross_attn.";
  zero(p + "q.weight");
  zero(p + "q.bias");
  zero(p + "k.weight");
  zero(p + "k.bias");
  auto& qb = m.find(p + "q.bias")->value;
  auto& kw = m.find(p + "k.weight")->value;  // [in, out]
  for (int h = 0; h < cfg.heads; ++h) {
    qb[h * dh] = static_cast<T>(strength);
    kw[0 * d + h * dh] = static_cast<T>(strength);
  }
}

inline gpcrfilter::protein::EmbeddingMatrix marked_embedding(std::size_t rows, std::uint32_t width,
                                                            const std::set<int>& marked) {
  gpcrfilter::protein::EmbeddingMatrix e;
  e.protein_id = "marked";
  e.rows = rows;
  e.width = width;
  e.values.assign(rows * width, 0.0f);
  for (std::size_t r = 0; r < rows; ++r) {
    if (marked.count(static_cast<int>(r))) e.values[r * width] = 1.0f;
    // Other channels carry noise that the projection discards.
    for (std::uint32_t c = 1; c < width; ++c) e.values[r * width + c] = static_cast<float>((r * 7 + c * 3) % 5) - 2;
  }
  return e;
}

}  // namespace oracle
