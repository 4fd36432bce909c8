#pragma once

// Run manifests and digest-keyed stage records.
//
// A run manifest is written when a command starts (status "running") and
// rewritten when it ends. A stage record remembers the parameters, input
// digests and output digests of one pipeline stage so a rerun can skip it.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gpcrfilter/error.hpp"
#include "gpcrfilter/hash.hpp"

namespace gpcrfilter {

#ifdef GPCRFILTER_VERSION
inline constexpr const char* kToolVersion = GPCRFILTER_VERSION;
#else
inline constexpr const char* kToolVersion = "0.0.0";
#endif

using DigestMap = std::map<std::string, std::string>;  // path -> digest

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline DigestMap digest_files(const std::vector<std::filesystem::path>& paths) {
  DigestMap out;
  for (const auto& p : paths) out[p.generic_string()] = file_digest(p.string());
  return out;
}

// Throws naming the first file whose content no longer matches.
inline void verify_digests(const DigestMap& recorded) {
  for (const auto& [path, digest] : recorded) {
    if (!std::filesystem::exists(path)) throw InputError("missing file " + path + " (recorded digest " + digest + ")");
    const std::string now = file_digest(path);
    if (now != digest) throw InputError("digest mismatch for " + path + ": recorded " + digest + ", found " + now);
  }
}

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(p.string() + ": " + e.what());
  }
}

inline void write_json_file(const nlohmann::json& j, const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw InputError("cannot write " + p.string());
  out << j.dump(2) << '\n';
}

struct RunManifest {
  std::string subcommand;
  std::map<std::string, std::string> config;  // resolved settings
  std::uint64_t seed = 0;
  DigestMap inputs;
  DigestMap outputs;
  std::string tool_version = kToolVersion;
  std::string started_at;
  std::string finished_at;
  std::string status = "running";

  nlohmann::json to_json() const {
    return {{"subcommand", subcommand}, {"config", config},           {"seed", seed},
            {"inputs", inputs},         {"outputs", outputs},         {"tool_version", tool_version},
            {"started_at", started_at}, {"finished_at", finished_at}, {"status", status}};
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    try {
      m.subcommand = j.at("subcommand").get<std::string>();
      m.config = j.at("config").get<std::map<std::string, std::string>>();
      m.seed = j.at("seed").get<std::uint64_t>();
      m.inputs = j.at("inputs").get<DigestMap>();
      m.outputs = j.at("outputs").get<DigestMap>();
      m.tool_version = j.at("tool_version").get<std::string>();
      m.started_at = j.at("started_at").get<std::string>();
      m.finished_at = j.at("finished_at").get<std::string>();
      m.status = j.at("status").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("malformed run manifest: ") + e.what());
    }
    return m;
  }

  void write(const std::filesystem::path& p) const { write_json_file(to_json(), p); }
  static RunManifest read(const std::filesystem::path& p) { return from_json(read_json_file(p)); }
};

struct StageRecord {
  std::string params;
  DigestMap inputs;
  DigestMap outputs;
};

inline void write_stage_record(const StageRecord& r, const std::filesystem::path& p) {
  write_json_file({{"params", r.params}, {"inputs", r.inputs}, {"outputs", r.outputs}}, p);
}

// True when the stage ran before with the same parameters and input digests
// and its outputs are still present; the stage can then be skipped. An output
// that exists with different content is a corrupted intermediate and throws.
inline bool stage_is_current(const std::filesystem::path& record, const std::string& params, const DigestMap& inputs) {
  if (!std::filesystem::exists(record)) return false;
  const auto j = read_json_file(record);
  StageRecord r;
  try {
    r.params = j.at("params").get<std::string>();
    r.inputs = j.at("inputs").get<DigestMap>();
    r.outputs = j.at("outputs").get<DigestMap>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(record.string() + ": malformed stage record: " + e.what());
  }
  if (r.params != params || r.inputs != inputs) return false;
  for (const auto& [path, _] : r.outputs)
    if (!std::filesystem::exists(path)) return false;
  verify_digests(r.outputs);
  return true;
}

}  // namespace gpcrfilter
