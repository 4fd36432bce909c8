#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "gpcrfilter/run_manifest.hpp"

namespace fs = std::filesystem;
using namespace gpcrfilter;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("gpcrfilter_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void put(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::trunc) << text; }

}  // namespace

TEST(RunManifest, RoundTrip) {
  const auto dir = scratch("manifest");
  RunManifest m;
  m.subcommand = "train";
  m.config = {{"epochs", "4"}, {"learning_rate", "0.001"}};
  m.seed = 17;
  m.inputs = {{"a.tsv", "00ff"}};
  m.outputs = {{"model.ckpt", "abcd"}};
  m.started_at = utc_timestamp();
  m.status = "complete";
  m.write(dir / "run.json");
  const auto r = RunManifest::read(dir / "run.json");
  EXPECT_EQ(r.to_json(), m.to_json());
  EXPECT_EQ(r.tool_version, kToolVersion);
  put(dir / "bad.json", "{\"subcommand\": \"x\"}");
  EXPECT_THROW(RunManifest::read(dir / "bad.json"), InputError);
  fs::remove_all(dir);
}

TEST(RunManifest, TimestampIsIsoUtc) {
  const auto t = utc_timestamp();
  ASSERT_EQ(t.size(), 20u);
  EXPECT_EQ(t[10], 'T');
  EXPECT_EQ(t.back(), 'Z');
}

TEST(Digests, MismatchNamesTheFile) {
  const auto dir = scratch("digest");
  const auto f = dir / "manifest.tsv";
  put(f, "a\tb\n");
  const auto d = digest_files({f});
  EXPECT_NO_THROW(verify_digests(d));
  put(f, "a\tc\n");
  try {
    verify_digests(d);
    FAIL() << "expected a digest mismatch";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("digest mismatch for " + f.generic_string()), std::string::npos);
  }
  fs::remove(f);
  EXPECT_THROW(verify_digests(d), InputError);
  fs::remove_all(dir);
}

TEST(StageRecord, SkipOnlyWhenParamsInputsAndOutputsAgree) {
  const auto dir = scratch("stage");
  const auto in = dir / "in.tsv", out = dir / "out.tsv", rec = dir / "stage.json";
  put(in, "input\n");
  put(out, "output\n");
  EXPECT_FALSE(stage_is_current(rec, "p=1", digest_files({in})));

  write_stage_record({"p=1", digest_files({in}), digest_files({out})}, rec);
  EXPECT_TRUE(stage_is_current(rec, "p=1", digest_files({in})));
  EXPECT_FALSE(stage_is_current(rec, "p=2", digest_files({in})));

  put(in, "changed input\n");
  EXPECT_FALSE(stage_is_current(rec, "p=1", digest_files({in})));
  put(in, "input\n");

  put(out, "tampered\n");
  EXPECT_THROW(stage_is_current(rec, "p=1", digest_files({in})), InputError);

  fs::remove(out);
  EXPECT_FALSE(stage_is_current(rec, "p=1", digest_files({in})));

  put(rec, "not json");
  EXPECT_THROW(stage_is_current(rec, "p=1", digest_files({in})), InputError);
  fs::remove_all(dir);
}
