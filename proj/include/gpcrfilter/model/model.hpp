#pragma once

// The interaction network.
//
//   protein:  residues [B,S,h_t] -> linear h_t->d -> L pre-norm encoder layers
//             (masked multi-head self-attention, FFN 4d) -> LayerNorm = memory
//   ligand:   atom features [B,V,h_d] -> linear h_d->d -> one GCN layer
//             ReLU(A_norm X W) -> prepend graph token -> [B,1+V,d]
//   decoder:  per layer, pre-norm: ligand self-attention, ligand->protein
//             cross-attention, FFN; each with a residual connection
//   readout:  LayerNorm, token 0, d -> d/2 -> ReLU -> 2 logits
//
// No positional encodings are added on either side. The final readout layer
// and the graph token start at zero, so an untrained model predicts p = 0.5.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "gpcrfilter/error.hpp"
#include "gpcrfilter/model/batch.hpp"
#include "gpcrfilter/model/config.hpp"
#include "gpcrfilter/nn/autograd.hpp"
#include "gpcrfilter/rng.hpp"

namespace gpcrfilter::model {

template <class T>
struct LinearParams {
  nn::Parameter<T>* weight = nullptr;  // [in, out]
  nn::Parameter<T>* bias = nullptr;    // [out], may be null
};

template <class T>
struct NormParams {
  nn::Parameter<T>* gamma = nullptr;
  nn::Parameter<T>* beta = nullptr;
};

template <class T>
struct AttentionParams {
  LinearParams<T> q, k, v, o;
};

template <class T>
struct FeedForwardParams {
  LinearParams<T> in, out;
};

template <class T>
struct EncoderLayerParams {
  NormParams<T> norm_attn, norm_ffn;
  AttentionParams<T> self_attn;
  FeedForwardParams<T> ffn;
};

template <class T>
struct DecoderLayerParams {
  NormParams<T> norm_self, norm_cross, norm_ffn;
  AttentionParams<T> self_attn, cross_attn;
  FeedForwardParams<T> ffn;
};

// Outputs of one forward pass, as tape variables.
struct ForwardResult {
  nn::Var logits;                         // [B, 2]
  std::vector<nn::Var> cross_attention;   // per decoder layer, [B*heads, 1+V, S]
  std::vector<nn::Var> encoder_attention; // per encoder layer, [B*heads, S, S]
  std::vector<nn::Var> ligand_attention;  // per decoder layer, [B*heads, 1+V, 1+V]
};

template <class T>
class InteractionModel {
 public:
  explicit InteractionModel(ModelConfig config, std::uint64_t init_seed = 0)
      : config_(config), dropout_rng_(init_seed ^ 0xd50u) {
    config_.validate();
    Rng rng(init_seed);
    const int d = config_.hidden;
    protein_proj_ = linear("protein_proj", config_.protein_width, d, rng);
    for (int l = 0; l < config_.encoder_layers; ++l) {
      const std::string p = "encoder." + std::to_string(l) + ".";
      EncoderLayerParams<T> layer;
      layer.norm_attn = norm(p + "norm_attn", d);
      layer.self_attn = attention(p + "self_attn", d, rng);
      layer.norm_ffn = norm(p + "norm_ffn", d);
      layer.ffn = feed_forward(p + "ffn", d, config_.ffn_width(), rng);
      encoder_.push_back(layer);
    }
    encoder_norm_ = norm("encoder.norm", d);
    ligand_proj_ = linear("ligand_proj", config_.atom_width, d, rng);
    gcn_ = linear("gcn", d, d, rng, /*with_bias=*/false);
    graph_token_ = add_param("graph_token", nn::Tensor<T>({d}));
    for (int l = 0; l < config_.decoder_layers; ++l) {
      const std::string p = "decoder." + std::to_string(l) + ".";
      DecoderLayerParams<T> layer;
      layer.norm_self = norm(p + "norm_self", d);
      layer.self_attn = attention(p + "self_attn", d, rng);
      layer.norm_cross = norm(p + "norm_cross", d);
      layer.cross_attn = attention(p + "cross_attn", d, rng);
      layer.norm_ffn = norm(p + "norm_ffn", d);
      layer.ffn = feed_forward(p + "ffn", d, config_.ffn_width(), rng);
      decoder_.push_back(layer);
    }
    decoder_norm_ = norm("decoder.norm", d);
    head_hidden_ = linear("head.hidden", d, config_.readout_hidden(), rng);
    head_out_ = linear("head.out", config_.readout_hidden(), 2, rng);
    head_out_.weight->value.fill(T(0));
  }

  InteractionModel(const InteractionModel&) = delete;
  InteractionModel& operator=(const InteractionModel&) = delete;

  const ModelConfig& config() const { return config_; }

  std::vector<nn::Parameter<T>*> parameters() {
    std::vector<nn::Parameter<T>*> out;
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }
  std::vector<const nn::Parameter<T>*> parameters() const {
    std::vector<const nn::Parameter<T>*> out;
    for (auto& p : params_) out.push_back(p.get());
    return out;
  }

  nn::Parameter<T>* find(const std::string& name) {
    for (auto& p : params_)
      if (p->name == name) return p.get();
    return nullptr;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (auto& p : params_) n += p->value.size();
    return n;
  }

  void reseed_dropout(std::uint64_t seed) { dropout_rng_ = Rng(seed); }

  ForwardResult forward(nn::Tape<T>& tape, const BatchInput<T>& in, bool training) {
    for (int b = 0; b < in.batch(); ++b) {
      bool any = false;
      for (int s = 0; s < in.max_residues(); ++s) any = any || in.residue_mask[b * in.max_residues() + s];
      if (!any) throw InputError("protein sequence is entirely masked");
    }
    ForwardResult result;
    // Protein encoder.
    nn::Var mem = apply(tape, protein_proj_, tape.constant(in.residues));
    for (const auto& layer : encoder_) {
      nn::Var h = apply(tape, layer.norm_attn, mem);
      nn::Var weights;
      nn::Var a = attend(tape, layer.self_attn, h, h, in.residue_mask, weights);
      result.encoder_attention.push_back(weights);
      mem = nn::add(tape, mem, drop(tape, a, training));
      h = apply(tape, layer.norm_ffn, mem);
      mem = nn::add(tape, mem, drop(tape, ffn(tape, layer.ffn, h, training), training));
    }
    mem = apply(tape, encoder_norm_, mem);

    // Ligand graph encoder.
    nn::Var x = apply(tape, ligand_proj_, tape.constant(in.atoms));
    x = nn::relu(tape, nn::graph_aggregate(tape, apply(tape, gcn_, x), in.gcn_edges));
    nn::Var y = nn::prepend_token(tape, x, tape.param(*graph_token_));

    // Decoder.
    for (const auto& layer : decoder_) {
      nn::Var h = apply(tape, layer.norm_self, y);
      nn::Var w_self, w_cross;
      y = nn::add(tape, y, drop(tape, attend(tape, layer.self_attn, h, h, in.token_mask, w_self), training));
      result.ligand_attention.push_back(w_self);
      h = apply(tape, layer.norm_cross, y);
      y = nn::add(tape, y, drop(tape, attend(tape, layer.cross_attn, h, mem, in.residue_mask, w_cross), training));
      result.cross_attention.push_back(w_cross);
      h = apply(tape, layer.norm_ffn, y);
      y = nn::add(tape, y, drop(tape, ffn(tape, layer.ffn, h, training), training));
    }
    y = apply(tape, decoder_norm_, y);

    nn::Var cls = nn::select_row(tape, y, 0);
    nn::Var hidden = nn::relu(tape, apply(tape, head_hidden_, cls));
    result.logits = apply(tape, head_out_, hidden);
    return result;
  }

  // Serialized parameter values, in registration order.
  std::vector<nn::Tensor<T>> state() const {
    std::vector<nn::Tensor<T>> s;
    for (auto& p : params_) s.push_back(p->value);
    return s;
  }

  void load_state(const std::vector<nn::Tensor<T>>& s) {
    if (s.size() != params_.size()) throw InputError("parameter count mismatch while loading state");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i].shape() != params_[i]->value.shape())
        throw InputError("shape mismatch for parameter " + params_[i]->name);
      params_[i]->value = s[i];
    }
  }

 private:
  nn::Parameter<T>* add_param(const std::string& name, nn::Tensor<T> value) {
    params_.push_back(std::make_unique<nn::Parameter<T>>(name, std::move(value)));
    return params_.back().get();
  }

  LinearParams<T> linear(const std::string& name, int in, int out, Rng& rng, bool with_bias = true) {
    nn::Tensor<T> w({in, out});
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (auto& v : w.vec()) v = static_cast<T>(rng.uniform(-bound, bound));
    LinearParams<T> p;
    p.weight = add_param(name + ".weight", std::move(w));
    if (with_bias) p.bias = add_param(name + ".bias", nn::Tensor<T>({out}));
    return p;
  }

  NormParams<T> norm(const std::string& name, int d) {
    return {add_param(name + ".gamma", nn::Tensor<T>({d}, T(1))), add_param(name + ".beta", nn::Tensor<T>({d}))};
  }

  AttentionParams<T> attention(const std::string& name, int d, Rng& rng) {
    return {linear(name + ".q", d, d, rng), linear(name + ".k", d, d, rng), linear(name + ".v", d, d, rng),
            linear(name + ".o", d, d, rng)};
  }

  FeedForwardParams<T> feed_forward(const std::string& name, int d, int width, Rng& rng) {
    return {linear(name + ".in", d, width, rng), linear(name + ".out", width, d, rng)};
  }

  nn::Var apply(nn::Tape<T>& tape, const LinearParams<T>& p, nn::Var x) {
    return nn::linear(tape, x, tape.param(*p.weight), p.bias ? tape.param(*p.bias) : nn::Var{});
  }

  nn::Var apply(nn::Tape<T>& tape, const NormParams<T>& p, nn::Var x) {
    return nn::layer_norm(tape, x, tape.param(*p.gamma), tape.param(*p.beta));
  }

  nn::Var drop(nn::Tape<T>& tape, nn::Var x, bool training) {
    return nn::dropout(tape, x, config_.dropout, training, dropout_rng_);
  }

  nn::Var attend(nn::Tape<T>& tape, const AttentionParams<T>& p, nn::Var query_in, nn::Var kv_in,
                 const std::vector<std::uint8_t>& key_mask, nn::Var& weights_out) {
    nn::Var q = apply(tape, p.q, query_in);
    nn::Var k = apply(tape, p.k, kv_in);
    nn::Var v = apply(tape, p.v, kv_in);
    nn::Var scores = nn::head_scores(tape, q, k, config_.heads);
    weights_out = nn::masked_softmax(tape, scores, key_mask, config_.heads);
    return apply(tape, p.o, nn::head_mix(tape, weights_out, v, config_.heads));
  }

  nn::Var ffn(nn::Tape<T>& tape, const FeedForwardParams<T>& p, nn::Var x, bool training) {
    return apply(tape, p.out, drop(tape, nn::relu(tape, apply(tape, p.in, x)), training));
  }

  ModelConfig config_;
  Rng dropout_rng_;
  std::vector<std::unique_ptr<nn::Parameter<T>>> params_;
  LinearParams<T> protein_proj_, ligand_proj_, gcn_, head_hidden_, head_out_;
  std::vector<EncoderLayerParams<T>> encoder_;
  NormParams<T> encoder_norm_;
  nn::Parameter<T>* graph_token_ = nullptr;
  std::vector<DecoderLayerParams<T>> decoder_;
  NormParams<T> decoder_norm_;
};

// Positive-class probability softmax(o)[1] for one row of logits.
inline double positive_probability(double o0, double o1) {
  const double m = std::max(o0, o1);
  const double e0 = std::exp(o0 - m), e1 = std::exp(o1 - m);
  return e1 / (e0 + e1);
}

struct Prediction {
  double logit_negative = 0;
  double logit_positive = 0;  // the scalar score s
  double probability = 0.5;   // softmax(o)[1]
};

// Eval-mode inference.
template <class T>
std::vector<Prediction> predict(InteractionModel<T>& model, const BatchInput<T>& in) {
  nn::Tape<T> tape;
  ForwardResult r = model.forward(tape, in, /*training=*/false);
  const auto& L = tape.value(r.logits);
  std::vector<Prediction> out(L.dim(0));
  for (int b = 0; b < L.dim(0); ++b) {
    out[b].logit_negative = static_cast<double>(L.at(b, 0));
    out[b].logit_positive = static_cast<double>(L.at(b, 1));
    out[b].probability = positive_probability(out[b].logit_negative, out[b].logit_positive);
  }
  return out;
}

}  // namespace gpcrfilter::model
