#pragma once

#include <string>

#include "gpcrfilter/chem/molgraph.hpp"
#include "gpcrfilter/error.hpp"

namespace gpcrfilter::model {

struct ModelConfig {
  int hidden = 256;             // d
  int protein_width = 1536;     // h_t
  int atom_width = chem::kAtomFeatureWidth;  // h_d
  int encoder_layers = 2;       // L
  int decoder_layers = 2;
  int heads = 8;
  int ffn_multiplier = 4;       // feed-forward width = ffn_multiplier * d
  double dropout = 0.1;

  int ffn_width() const { return ffn_multiplier * hidden; }
  int readout_hidden() const { return hidden / 2; }

  void validate() const {
    if (hidden <= 0 || protein_width <= 0 || atom_width <= 0 || heads <= 0 || ffn_multiplier <= 0)
      throw InputError("model config: sizes must be positive");
    if (hidden % heads != 0) throw InputError("model config: hidden size must be divisible by heads");
    if (hidden < 2) throw InputError("model config: hidden size must be >= 2");
    if (encoder_layers < 0 || decoder_layers < 1) throw InputError("model config: need >= 1 decoder layer");
    if (dropout < 0.0 || dropout >= 1.0) throw InputError("model config: dropout must be in [0, 1)");
  }
};

}  // namespace gpcrfilter::model
