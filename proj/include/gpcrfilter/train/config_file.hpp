#pragma once

// Flat key=value configuration files. '#' at the start of a line or after
// whitespace starts a comment (so SMILES values keep their triple bonds),
// blank lines are ignored, keys may appear once. Command-line overrides are applied with
// set() after loading and win over file values.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "gpcrfilter/error.hpp"
#include "gpcrfilter/model/config.hpp"

namespace gpcrfilter::train {

class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in) {
    KeyValueConfig c;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      for (std::size_t i = 0; i < line.size(); ++i)
        if (line[i] == '#' && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
          line.erase(i);
          break;
        }
      const std::string body = trim(line);
      if (body.empty()) continue;
      const auto eq = body.find('=');
      if (eq == std::string::npos) throw ParseError("expected key = value", line_no, "line");
      const std::string key = trim(body.substr(0, eq));
      const std::string value = trim(body.substr(eq + 1));
      if (key.empty()) throw ParseError("empty key", line_no, "line");
      if (!c.values_.emplace(key, value).second) throw ParseError("duplicate key '" + key + "'", line_no, "line");
    }
    return c;
  }

  static KeyValueConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
  }

  static KeyValueConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config " + path.string());
    try {
      return parse(in);
    } catch (const ParseError& e) {
      throw InputError(path.string() + ": " + e.what());
    }
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string get(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  template <class N>
  N get_number(const std::string& key, N fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    const std::string& s = it->second;
    N v{};
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size())
      throw InputError("config key '" + key + "': '" + s + "' is not a valid number");
    return v;
  }

  // Rejects keys outside `known` so typos do not silently fall back to
  // defaults.
  void require_known(const std::set<std::string>& known) const {
    for (const auto& [k, _] : values_)
      if (!known.count(k)) throw InputError("unknown config key '" + k + "'");
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  }

  std::map<std::string, std::string> values_;
};

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-4;
  int early_stop_patience = 10;
  std::uint64_t seed = 0;
  int eval_every = 1;

  void validate() const {
    if (epochs <= 0) throw InputError("train config: epochs must be positive");
    if (batch_size <= 0) throw InputError("train config: batch_size must be positive");
    if (!(learning_rate > 0)) throw InputError("train config: learning_rate must be positive");
    if (early_stop_patience < 0) throw InputError("train config: early_stop_patience must be >= 0");
    if (eval_every <= 0) throw InputError("train config: eval_every must be positive");
  }
};

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys{
      "epochs",         "batch_size",   "learning_rate", "early_stop_patience", "seed",
      "eval_every",     "hidden",       "protein_width", "encoder_layers",      "decoder_layers",
      "heads",          "ffn_multiplier", "dropout"};
  return keys;
}

inline TrainConfig train_config_from(const KeyValueConfig& c) {
  TrainConfig t;
  t.epochs = c.get_number("epochs", t.epochs);
  t.batch_size = c.get_number("batch_size", t.batch_size);
  t.learning_rate = c.get_number("learning_rate", t.learning_rate);
  t.early_stop_patience = c.get_number("early_stop_patience", t.early_stop_patience);
  t.seed = c.get_number("seed", t.seed);
  t.eval_every = c.get_number("eval_every", t.eval_every);
  t.validate();
  return t;
}

inline model::ModelConfig model_config_from(const KeyValueConfig& c) {
  model::ModelConfig m;
  m.hidden = c.get_number("hidden", m.hidden);
  m.protein_width = c.get_number("protein_width", m.protein_width);
  m.encoder_layers = c.get_number("encoder_layers", m.encoder_layers);
  m.decoder_layers = c.get_number("decoder_layers", m.decoder_layers);
  m.heads = c.get_number("heads", m.heads);
  m.ffn_multiplier = c.get_number("ffn_multiplier", m.ffn_multiplier);
  m.dropout = c.get_number("dropout", m.dropout);
  m.validate();
  return m;
}

// Resolved configuration as key=value text, stable key order.
inline std::string render_config(const TrainConfig& t, const model::ModelConfig& m) {
  std::ostringstream out;
  out.precision(17);
  out << "batch_size = " << t.batch_size << "\n"
      << "decoder_layers = " << m.decoder_layers << "\n"
      << "dropout = " << m.dropout << "\n"
      << "early_stop_patience = " << t.early_stop_patience << "\n"
      << "encoder_layers = " << m.encoder_layers << "\n"
      << "epochs = " << t.epochs << "\n"
      << "eval_every = " << t.eval_every << "\n"
      << "ffn_multiplier = " << m.ffn_multiplier << "\n"
      << "heads = " << m.heads << "\n"
      << "hidden = " << m.hidden << "\n"
      << "learning_rate = " << t.learning_rate << "\n"
      << "protein_width = " << m.protein_width << "\n"
      << "seed = " << t.seed << "\n";
  return out.str();
}

}  // namespace gpcrfilter::train
