#pragma once

// Checkpoint container, little-endian:
//
//   bytes 0-6   magic "GFCKPT1"
//   u32         config block length, then that many bytes of key=value lines
//   u32         tensor count
//   per tensor: u32 name length, name bytes, u32 rank, u32 dims[rank],
//               f32 values, row-major
//
// Tensors are stored by name and must match the model's parameter list exactly.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "gpcrfilter/error.hpp"
#include "gpcrfilter/model/config.hpp"
#include "gpcrfilter/model/model.hpp"
#include "gpcrfilter/protein/embedding_io.hpp"

namespace gpcrfilter::model {

inline constexpr std::string_view kCheckpointMagic = "GFCKPT1";

struct NamedTensor {
  std::string name;
  nn::Tensor<float> value;
};

struct Checkpoint {
  ModelConfig config;
  std::map<std::string, std::string> metadata;  // extra key=value lines, e.g. training seed
  std::vector<NamedTensor> tensors;
};

inline std::string config_block(const ModelConfig& c, const std::map<std::string, std::string>& metadata) {
  std::ostringstream out;
  out << "hidden=" << c.hidden << "\nprotein_width=" << c.protein_width << "\natom_width=" << c.atom_width
      << "\nencoder_layers=" << c.encoder_layers << "\ndecoder_layers=" << c.decoder_layers << "\nheads=" << c.heads
      << "\nffn_multiplier=" << c.ffn_multiplier << "\ndropout=" << c.dropout << "\n";
  for (const auto& [k, v] : metadata) out << "meta." << k << "=" << v << "\n";
  return out.str();
}

inline void parse_config_block(std::string_view text, Checkpoint& ck) {
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("checkpoint: malformed config line '" + line + "'");
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    auto& c = ck.config;
    try {
      if (key == "hidden") c.hidden = std::stoi(value);
      else if (key == "protein_width") c.protein_width = std::stoi(value);
      else if (key == "atom_width") c.atom_width = std::stoi(value);
      else if (key == "encoder_layers") c.encoder_layers = std::stoi(value);
      else if (key == "decoder_layers") c.decoder_layers = std::stoi(value);
      else if (key == "heads") c.heads = std::stoi(value);
      else if (key == "ffn_multiplier") c.ffn_multiplier = std::stoi(value);
      else if (key == "dropout") c.dropout = std::stod(value);
      else if (key.rfind("meta.", 0) == 0) ck.metadata[key.substr(5)] = value;
      else throw InputError("checkpoint: unknown config key '" + key + "'");
    } catch (const std::logic_error&) {
      throw InputError("checkpoint: bad value for '" + key + "'");
    }
  }
  ck.config.validate();
}

inline std::string encode_checkpoint(const Checkpoint& ck) {
  using protein::detail::put_u32;
  std::string out(kCheckpointMagic);
  const std::string block = config_block(ck.config, ck.metadata);
  put_u32(out, static_cast<std::uint32_t>(block.size()));
  out += block;
  put_u32(out, static_cast<std::uint32_t>(ck.tensors.size()));
  for (const auto& t : ck.tensors) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    put_u32(out, static_cast<std::uint32_t>(t.value.rank()));
    for (int d : t.value.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float f : t.value.vec()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

inline Checkpoint decode_checkpoint(std::string_view bytes) {
  std::size_t pos = 0;
  auto need = [&](std::size_t n) {
    if (bytes.size() - pos < n) throw InputError("checkpoint: truncated at byte " + std::to_string(pos));
  };
  auto u32 = [&]() {
    need(4);
    const auto v = protein::detail::get_u32(reinterpret_cast<const unsigned char*>(bytes.data() + pos));
    pos += 4;
    return v;
  };
  if (bytes.substr(0, kCheckpointMagic.size()) != kCheckpointMagic) throw InputError("checkpoint: bad magic");
  pos = kCheckpointMagic.size();
  Checkpoint ck;
  const std::uint32_t block_len = u32();
  need(block_len);
  parse_config_block(bytes.substr(pos, block_len), ck);
  pos += block_len;
  const std::uint32_t count = u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const std::uint32_t name_len = u32();
    need(name_len);
    t.name = std::string(bytes.substr(pos, name_len));
    pos += name_len;
    const std::uint32_t rank = u32();
    if (rank > 3) throw InputError("checkpoint: tensor " + t.name + " has rank > 3");
    std::vector<int> shape;
    for (std::uint32_t r = 0; r < rank; ++r) shape.push_back(static_cast<int>(u32()));
    std::vector<float> values(nn::Tensor<float>::element_count(shape));
    need(values.size() * 4);
    for (auto& v : values) v = std::bit_cast<float>(u32());
    t.value = nn::Tensor<float>(std::move(shape), std::move(values));
    ck.tensors.push_back(std::move(t));
  }
  if (pos != bytes.size()) throw InputError("checkpoint: trailing bytes after last tensor");
  return ck;
}

template <class T>
Checkpoint make_checkpoint(const InteractionModel<T>& model, std::map<std::string, std::string> metadata = {}) {
  Checkpoint ck;
  ck.config = model.config();
  ck.metadata = std::move(metadata);
  for (const auto* p : model.parameters()) ck.tensors.push_back({p->name, p->value.template cast<float>()});
  return ck;
}

template <class T>
void load_checkpoint(InteractionModel<T>& model, const Checkpoint& ck) {
  auto params = model.parameters();
  if (params.size() != ck.tensors.size())
    throw InputError("checkpoint has " + std::to_string(ck.tensors.size()) + " tensors, model expects " +
                     std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = ck.tensors[i];
    if (t.name != params[i]->name) throw InputError("checkpoint tensor " + t.name + " where " + params[i]->name + " expected");
    if (t.value.shape() != params[i]->value.shape())
      throw InputError("checkpoint tensor " + t.name + " has shape " + nn::shape_string(t.value.shape()));
    params[i]->value = t.value.template cast<T>();
  }
}

inline void write_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const std::string bytes = encode_checkpoint(ck);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write checkpoint: " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("failed writing checkpoint: " + path.string());
}

inline Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint: " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_checkpoint(bytes);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace gpcrfilter::model
