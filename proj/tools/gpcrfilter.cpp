// gpcrfilter command-line tool.
//
// Exit codes: 0 success, 1 bad input (files, arguments, data), 2 internal
// invariant violation.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif
#include <nlohmann/json.hpp>

#include "gpcrfilter/analysis/cluster.hpp"
#include "gpcrfilter/chem/canon.hpp"
#include "gpcrfilter/chem/fingerprint.hpp"
#include "gpcrfilter/chem/smiles.hpp"
#include "gpcrfilter/dataset/curate.hpp"
#include "gpcrfilter/dataset/io.hpp"
#include "gpcrfilter/dataset/splits.hpp"
#include "gpcrfilter/dataset/stats.hpp"
#include "gpcrfilter/dataset/validate.hpp"
#include "gpcrfilter/error.hpp"
#include "gpcrfilter/interpret/align.hpp"
#include "gpcrfilter/interpret/attention.hpp"
#include "gpcrfilter/interpret/pdb.hpp"
#include "gpcrfilter/interpret/pocket.hpp"
#include "gpcrfilter/interpret/report.hpp"
#include "gpcrfilter/model/checkpoint.hpp"
#include "gpcrfilter/model/model.hpp"
#include "gpcrfilter/protein/embedding_io.hpp"
#include "gpcrfilter/protein/fasta.hpp"
#include "gpcrfilter/protein/stub_embedder.hpp"
#include "gpcrfilter/run_manifest.hpp"
#include "gpcrfilter/screen.hpp"
#include "gpcrfilter/train/config_file.hpp"
#include "gpcrfilter/train/metrics.hpp"
#include "gpcrfilter/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace gpcrfilter;
using Model = model::InteractionModel<float>;

namespace {

bool g_quiet = false;

void note(const std::string& msg) {
  if (!g_quiet) std::cerr << "gpcrfilter: " << msg << '\n';
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

std::string fmt_opt(const std::optional<double>& v, int digits = 4) { return v ? fmt(*v, digits) : "NA"; }

// ---- inputs ---------------------------------------------------------------

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot open " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::trunc);
  if (!out) throw InputError("cannot write " + p.string());
  return out;
}

template <class F>
auto with_path(const fs::path& p, F&& f) {
  try {
    return f();
  } catch (const InvariantError&) {
    throw;
  } catch (const InputError& e) {
    throw InputError(p.string() + ": " + e.what());
  }
}

// Positives TSV (target, key, smiles) or a split manifest, told apart by the
// manifest's header line.
std::vector<dataset::InteractionRecord> read_records(const fs::path& p) {
  return with_path(p, [&] {
    auto in = open_in(p);
    std::string first;
    std::getline(in, first);
    in.clear();
    in.seekg(0);
    if (first.rfind("# protocol=", 0) == 0) return dataset::read_manifest(in).records;
    return dataset::read_positives(in);
  });
}

dataset::SplitManifest read_manifest(const fs::path& p) {
  return with_path(p, [&] { return dataset::read_manifest(p); });
}

std::vector<protein::ProteinRecord> read_fasta(const fs::path& p) {
  return with_path(p, [&] {
    auto in = open_in(p);
    auto records = protein::parse_fasta(in);
    if (records.empty()) throw InputError("no FASTA records");
    return records;
  });
}

std::vector<screen::Ligand> read_ligands(const fs::path& p) {
  auto in = open_in(p);
  return screen::read_ligands(in);
}

const protein::ProteinRecord& pick_receptor(const std::vector<protein::ProteinRecord>& records,
                                            const std::string& target) {
  if (target.empty()) {
    if (records.size() != 1) throw InputError("FASTA holds " + std::to_string(records.size()) +
                                              " records; choose one with --target");
    return records[0];
  }
  for (const auto& r : records)
    if (r.id == target) return r;
  throw InputError("target '" + target + "' not in FASTA");
}

// Receptor embeddings from a directory of .emb files, or stub embeddings of
// FASTA sequences when no directory is given. With both, row counts are
// checked against the sequences.
class ReceptorSource {
 public:
  ReceptorSource(std::optional<fs::path> embeddings, const std::vector<protein::ProteinRecord>& sequences,
                 std::uint32_t width)
      : embeddings_(std::move(embeddings)), width_(width) {
    for (const auto& r : sequences) sequences_[r.id] = r;
    if (!embeddings_ && sequences_.empty()) throw InputError("need --embeddings or --fasta for receptor features");
  }

  protein::EmbeddingMatrix operator()(const std::string& id) const {
    const auto seq = sequences_.find(id);
    if (embeddings_) {
      auto m = protein::read_embeddings(protein::embedding_path(*embeddings_, id));
      if (m.width != width_)
        throw InputError("embedding width " + std::to_string(m.width) + " for " + id + ", model expects " +
                         std::to_string(width_));
      if (seq != sequences_.end()) protein::require_rows_match(m, seq->second.sequence.size());
      for (std::size_t i = 0; i < m.values.size(); ++i)
        if (!std::isfinite(m.values[i]))
          throw InputError("non-finite value in embedding of " + id + " at row " + std::to_string(i / m.width));
      return m;
    }
    if (seq == sequences_.end()) throw InputError("no sequence for target '" + id + "' in FASTA");
    return protein::stub_embed(seq->second, width_);
  }

 private:
  std::optional<fs::path> embeddings_;
  std::map<std::string, protein::ProteinRecord> sequences_;
  std::uint32_t width_;
};

fs::path checkpoint_file(const fs::path& p) { return fs::is_directory(p) ? p / "model.ckpt" : p; }

std::unique_ptr<Model> load_model(const fs::path& p) {
  const auto ck = model::read_checkpoint(checkpoint_file(p));
  auto m = std::make_unique<Model>(ck.config);
  with_path(checkpoint_file(p), [&] {
    model::load_checkpoint(*m, ck);
    return 0;
  });
  return m;
}

// Writes a run manifest before work starts and finalizes it on completion.
class RunScope {
 public:
  RunScope(fs::path path, RunManifest m) : path_(std::move(path)), m_(std::move(m)) {
    if (path_.has_parent_path()) fs::create_directories(path_.parent_path());
    m_.started_at = utc_timestamp();
    m_.write(path_);
  }
  RunScope(const RunScope&) = delete;
  ~RunScope() {
    if (done_) return;
    try {
      m_.status = "failed";
      m_.finished_at = utc_timestamp();
      m_.write(path_);
    } catch (...) {
    }
  }

  void complete(const std::vector<fs::path>& outputs) {
    m_.outputs = digest_files(outputs);
    m_.finished_at = utc_timestamp();
    m_.status = "complete";
    m_.write(path_);
    done_ = true;
  }

 private:
  fs::path path_;
  RunManifest m_;
  bool done_ = false;
};

fs::path sidecar(const fs::path& p, const std::string& suffix) { return fs::path(p.string() + suffix); }

std::vector<fs::path> existing(std::initializer_list<std::optional<fs::path>> paths) {
  std::vector<fs::path> out;
  for (const auto& p : paths)
    if (p && !p->empty()) out.push_back(*p);
  return out;
}

// ---- dataset --------------------------------------------------------------

struct CurateSummary {
  std::size_t rows = 0, records = 0, rejects = 0, duplicates = 0;
};

CurateSummary run_curate(const fs::path& input, const fs::path& out, const fs::path& rejects, const fs::path& stats) {
  auto in = open_in(input);
  const auto rows = with_path(input, [&] { return dataset::read_source_rows(in); });
  const auto result = dataset::curate(rows);
  {
    auto o = open_out(out);
    dataset::write_positives(result.records, o);
  }
  {
    auto r = open_out(rejects);
    r << "line\ttarget_id\tsmiles\tsource\treason\n";
    for (const auto& x : result.rejects)
      r << x.row.line << '\t' << x.row.target_id << '\t' << x.row.smiles << '\t' << x.row.source << '\t' << x.reason
        << '\n';
  }
  nlohmann::json j = dataset::stats_json(dataset::distribution_stats(result.records));
  j["source_rows"] = rows.size();
  j["duplicates"] = result.duplicates;
  j["rejected"] = result.rejects.size();
  write_json_file(j, stats);
  if (!result.rejects.empty())
    note(std::to_string(result.rejects.size()) + " rows quarantined to " + rejects.string());
  return {rows.size(), result.records.size(), result.rejects.size(), result.duplicates};
}

dataset::SplitManifest run_split(const fs::path& input, dataset::Protocol protocol, std::uint64_t seed,
                                 const fs::path& out, const fs::path& stats) {
  auto records = read_records(input);
  std::vector<dataset::InteractionRecord> positives;
  for (auto& r : records)
    if (r.label == dataset::Label::positive) positives.push_back(std::move(r));
  const auto m = dataset::split(protocol, positives, seed);
  const auto violations = dataset::validate_manifest(m);
  if (!violations.empty()) throw InvariantError("split violates its protocol: " + violations.front());
  for (const auto& w : m.warnings) note("warning: " + w);
  {
    auto o = open_out(out);
    dataset::write_manifest(m, o);
  }
  write_json_file(dataset::manifest_stats_json(m), stats);
  return m;
}

// ---- training ---------------------------------------------------------------

struct TrainSetup {
  train::KeyValueConfig config;
  train::TrainConfig train;
  model::ModelConfig model;
};

TrainSetup resolve_config(const std::optional<fs::path>& file, const std::vector<std::string>& overrides,
                          const std::set<std::string>& extra_keys = {}) {
  TrainSetup s;
  if (file) s.config = train::KeyValueConfig::load(*file);
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw InputError("--set expects key=value, got '" + kv + "'");
    s.config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  auto known = train::known_config_keys();
  known.insert(extra_keys.begin(), extra_keys.end());
  s.config.require_known(known);
  s.train = train::train_config_from(s.config);
  s.model = train::model_config_from(s.config);
  return s;
}

struct TrainOutcome {
  train::TrainReport report;
  fs::path checkpoint, log;
};

TrainOutcome run_train(const dataset::SplitManifest& manifest, const TrainSetup& setup, const ReceptorSource& source,
                       const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const auto train_records = manifest.partition(dataset::Partition::train);
  const auto val_records = manifest.partition(dataset::Partition::val);
  if (train_records.empty()) throw InputError("manifest has no train records");
  if (val_records.empty()) throw InputError("manifest has no val records");

  train::FeatureCache cache([&](const std::string& id) { return source(id); });
  const auto train_set = cache.examples(train_records);
  const auto val_set = cache.examples(val_records);

  Model m(setup.model, setup.train.seed);
  TrainOutcome out{{}, out_dir / "model.ckpt", out_dir / "train_log.tsv"};
  auto log = open_out(out.log);
  log << "epoch\ttrain_loss\tval_loss\tval_auc\tval_ap\tval_acc\timproved\n";
  note("training on " + std::to_string(train_set.size()) + " pairs, validating on " +
       std::to_string(val_set.size()));
  out.report = train::fit(m, train_set, val_set, setup.train, [&](const train::EpochLog& e) {
    log << e.epoch << '\t' << fmt(e.train_loss, 6) << '\t';
    if (e.evaluated) {
      log << fmt(e.val_loss, 6) << '\t' << fmt_opt(e.val->auc) << '\t' << fmt_opt(e.val->ap) << '\t'
          << fmt(e.val->acc) << '\t' << (e.improved ? 1 : 0) << '\n';
    } else {
      log << "NA\tNA\tNA\tNA\t0\n";
    }
    log.flush();
    if (e.evaluated)
      note("epoch " + std::to_string(e.epoch) + " loss " + fmt(e.train_loss) + " val auc " + fmt_opt(e.val->auc));
    return true;
  });
  std::map<std::string, std::string> meta{{"seed", std::to_string(setup.train.seed)},
                                          {"best_epoch", std::to_string(out.report.best_epoch)},
                                          {"protocol", std::string(dataset::to_string(manifest.protocol))}};
  model::write_checkpoint(model::make_checkpoint(m, meta), out.checkpoint);
  {
    auto cfg = open_out(out_dir / "resolved.cfg");
    cfg << train::render_config(setup.train, setup.model);
  }
  note("best epoch " + std::to_string(out.report.best_epoch) +
       (out.report.stopped_early ? " (stopped early)" : ""));
  return out;
}

nlohmann::json metrics_json(const train::EvalResult& r, const std::string& partition) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"partition", partition}, {"count", r.count},         {"positives", r.positives},
          {"threshold", r.threshold}, {"acc", r.acc},           {"precision", r.precision},
          {"recall", r.recall},       {"f1", r.f1},             {"auc", opt(r.auc)},
          {"ap", opt(r.ap)}};
}

train::EvalResult run_eval(Model& m, const dataset::SplitManifest& manifest, dataset::Partition partition,
                           const ReceptorSource& source, int batch_size) {
  const auto records = manifest.partition(partition);
  if (records.empty())
    throw InputError("manifest has no " + std::string(dataset::to_string(partition)) + " records");
  train::FeatureCache cache([&](const std::string& id) { return source(id); });
  return train::evaluate(m, cache.examples(records), batch_size);
}

// ---- screening and explanation -----------------------------------------------

struct ExplainInputs {
  const protein::ProteinRecord* receptor = nullptr;
  const protein::EmbeddingMatrix* embedding = nullptr;
  fs::path pdb;
  char chain = 'A';
  std::string ligand_resname;
  int k = interpret::kDefaultTopK;
  bool layer_average = false;
  double min_identity = interpret::kMinAlignmentIdentity;
};

struct Structure {
  interpret::PdbStructure pdb;
  const interpret::PdbChain* chain = nullptr;
  interpret::Alignment alignment;
  std::vector<int> pocket;
};

Structure load_structure(const ExplainInputs& in) {
  Structure s;
  s.pdb = with_path(in.pdb, [&] { return interpret::read_pdb(in.pdb); });
  s.chain = with_path(in.pdb, [&] { return &s.pdb.chain(in.chain); });
  const auto ligand = with_path(in.pdb, [&] { return s.pdb.ligand_atoms(in.ligand_resname); });
  s.alignment = interpret::align_to_chain(in.receptor->sequence, interpret::chain_sequence(*s.chain), in.min_identity);
  s.pocket = interpret::pocket_residues(*s.chain, ligand, interpret::kPocketCutoff);
  if (s.pocket.empty()) note("warning: no chain residue lies within 5 A of " + in.ligand_resname);
  return s;
}

nlohmann::json explain_one(Model& m, const ExplainInputs& in, const Structure& s, const std::string& smiles) {
  const chem::MolGraph g = chem::parse_smiles(smiles);
  const auto att = interpret::extract_attention(m, g, *in.embedding, in.layer_average);
  const auto report = interpret::pocket_hits(att.scores, s.alignment.query_to_target, s.pocket, in.k);
  interpret::ReportContext ctx{in.receptor->id, smiles, att.probability, in.pdb.string(), in.ligand_resname,
                               in.layer_average};
  return interpret::pocket_report_json(report, *s.chain, s.alignment, ctx);
}

// ---- pipeline -----------------------------------------------------------------

const std::set<std::string>& pipeline_keys() {
  static const std::set<std::string> keys{"source",        "fasta",         "embeddings",     "protocol",
                                          "eval_partition", "pdb",          "chain",          "ligand_resname",
                                          "explain_target", "explain_smiles", "k",            "layer_average"};
  return keys;
}

class Stage {
 public:
  Stage(fs::path dir, std::string name, bool force) : dir_(std::move(dir)), name_(std::move(name)), force_(force) {}

  // Runs `work` unless the recorded stage matches; returns true if it ran.
  template <class F>
  bool run(const std::string& params, const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs,
           F&& work) {
    const fs::path record = dir_ / "stages" / (name_ + ".json");
    const auto in_digests = digest_files(inputs);
    if (!force_ && stage_is_current(record, params, in_digests)) {
      note(name_ + ": up to date, skipped");
      return false;
    }
    note(name_ + ": running");
    fs::remove(record);
    work();
    fs::create_directories(record.parent_path());
    write_stage_record({params, in_digests, digest_files(outputs)}, record);
    return true;
  }

 private:
  fs::path dir_;
  std::string name_;
  bool force_;
};

fs::path resolve_relative(const fs::path& base, const std::string& value) {
  const fs::path p(value);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

// ---- command wiring ---------------------------------------------------------------

struct Options {
  // shared
  std::string input, out, fasta, embeddings, ckpt, manifest, config, target, smiles, smiles_file, pdb, records;
  std::string rejects, stats, roc, protocol = "random", partition = "test", chain = "A", ligand_resname;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  int top = analysis::kDefaultTopReceptors, k = interpret::kDefaultTopK, batch_size = 32, radius = 2,
      width = chem::kFingerprintWidth, top_n = 0;
  std::uint32_t embed_width = 1536;
  double threshold = train::kDefaultThreshold, min_probability = -1, min_identity = interpret::kMinAlignmentIdentity;
  bool layer_average = false, force = false, bits = false;
};

std::optional<fs::path> opt_path(const std::string& s) {
  return s.empty() ? std::nullopt : std::optional<fs::path>(s);
}

RunManifest base_manifest(const std::string& subcommand, std::map<std::string, std::string> config,
                          std::uint64_t seed, const std::vector<fs::path>& inputs) {
  RunManifest m;
  m.subcommand = subcommand;
  m.config = std::move(config);
  m.seed = seed;
  m.inputs = digest_files(inputs);
  return m;
}

int cmd_curate(const Options& o) {
  const fs::path out = o.out;
  const fs::path rejects = o.rejects.empty() ? sidecar(out, ".rejects.tsv") : fs::path(o.rejects);
  const fs::path stats = o.stats.empty() ? sidecar(out, ".stats.json") : fs::path(o.stats);
  RunScope run(sidecar(out, ".run.json"), base_manifest("dataset curate", {{"input", o.input}}, 0, {o.input}));
  const auto s = run_curate(o.input, out, rejects, stats);
  run.complete({out, rejects, stats});
  std::cout << "rows " << s.rows << "\nrecords " << s.records << "\nduplicates " << s.duplicates << "\nrejected "
            << s.rejects << '\n';
  return 0;
}

int cmd_split(const Options& o) {
  const auto protocol = dataset::parse_protocol(o.protocol);
  const fs::path out = o.out;
  const fs::path stats = o.stats.empty() ? sidecar(out, ".stats.json") : fs::path(o.stats);
  RunScope run(sidecar(out, ".run.json"),
               base_manifest("dataset split", {{"input", o.input}, {"protocol", o.protocol}}, o.seed, {o.input}));
  const auto m = run_split(o.input, protocol, o.seed, out, stats);
  run.complete({out, stats});
  const auto c = m.counts();
  std::cout << "train " << c[0] << "\nval " << c[1] << "\ntest " << c[2] << '\n';
  return 0;
}

int cmd_stats(const Options& o) {
  const auto j = dataset::stats_json(dataset::distribution_stats(read_records(o.input), static_cast<std::size_t>(o.top)));
  if (o.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(j, o.out);
  }
  return 0;
}

int cmd_chem(const Options& o, bool fingerprint) {
  auto emit = [&](const std::string& smiles, std::ostream& out) {
    const auto g = chem::parse_smiles(smiles);
    if (!fingerprint) {
      out << chem::canonical_key(g);
      return;
    }
    const auto fp = chem::morgan_fingerprint(g, o.radius, o.width);
    if (!o.bits) {
      out << fp.to_hex();
      return;
    }
    bool first = true;
    for (int i = 0; i < fp.width(); ++i)
      if (fp.test(i)) {
        out << (first ? "" : ",") << i;
        first = false;
      }
  };
  if (!o.smiles.empty()) {
    emit(o.smiles, std::cout);
    std::cout << '\n';
    return 0;
  }
  if (o.input.empty()) throw InputError("give --smiles or --in");
  for (const auto& l : read_ligands(o.input)) {
    try {
      emit(l.smiles, std::cout);
    } catch (const ParseError& e) {
      throw InputError(o.input + ": line " + std::to_string(l.line) + ": " + e.what());
    }
    std::cout << '\t' << l.smiles << '\n';
  }
  return 0;
}

int cmd_embed_stub(const Options& o) {
  const auto records = read_fasta(o.fasta);
  fs::create_directories(o.out);
  for (const auto& r : records) protein::write_embeddings(protein::stub_embed(r, o.embed_width),
                                                          protein::embedding_path(o.out, r.id));
  std::cout << "wrote " << records.size() << " embeddings to " << o.out << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  auto setup = resolve_config(opt_path(o.config), o.sets);
  const fs::path out_dir = o.out;
  std::map<std::string, std::string> cfg = setup.config.values();
  cfg["manifest"] = fs::absolute(o.manifest).string();
  if (!o.fasta.empty()) cfg["fasta"] = fs::absolute(o.fasta).string();
  if (!o.embeddings.empty()) cfg["embeddings"] = fs::absolute(o.embeddings).string();
  RunScope run(out_dir / "run.json",
               base_manifest("train", cfg, setup.train.seed, existing({o.manifest, opt_path(o.fasta), opt_path(o.config)})));
  const auto manifest = read_manifest(o.manifest);
  const ReceptorSource source(opt_path(o.embeddings), o.fasta.empty() ? std::vector<protein::ProteinRecord>{}
                                                                       : read_fasta(o.fasta),
                              static_cast<std::uint32_t>(setup.model.protein_width));
  const auto t = run_train(manifest, setup, source, out_dir);
  run.complete({t.checkpoint, t.log, out_dir / "resolved.cfg"});
  std::cout << "checkpoint " << t.checkpoint.string() << "\nbest_epoch " << t.report.best_epoch << "\nbest_val_auc "
            << fmt_opt(t.report.best_val_auc) << '\n';
  return 0;
}

// Defaults for eval taken from the training run recorded next to the checkpoint.
std::map<std::string, std::string> training_run_config(const fs::path& ckpt) {
  const fs::path run = (fs::is_directory(ckpt) ? ckpt : ckpt.parent_path()) / "run.json";
  if (!fs::exists(run)) return {};
  const auto m = RunManifest::read(run);
  return m.subcommand == "train" ? m.config : std::map<std::string, std::string>{};
}

int cmd_eval(const Options& o) {
  auto m = load_model(o.ckpt);
  const auto recorded = training_run_config(o.ckpt);
  auto pick = [&](const std::string& given, const char* key) {
    if (!given.empty()) return given;
    auto it = recorded.find(key);
    return it == recorded.end() ? std::string() : it->second;
  };
  const std::string manifest_path = pick(o.manifest, "manifest");
  if (manifest_path.empty()) throw InputError("--manifest is required (no training run recorded with the checkpoint)");
  const std::string fasta = pick(o.fasta, "fasta");
  std::string embeddings = o.embeddings;
  if (embeddings.empty() && o.fasta.empty()) embeddings = pick("", "embeddings");
  const auto partition = dataset::parse_partition(o.partition);
  const ReceptorSource source(opt_path(embeddings), fasta.empty() ? std::vector<protein::ProteinRecord>{}
                                                                  : read_fasta(fasta),
                              static_cast<std::uint32_t>(m->config().protein_width));
  const auto result = run_eval(*m, read_manifest(manifest_path), partition, source, o.batch_size);
  const auto j = metrics_json(result, o.partition);
  if (!o.roc.empty()) train::export_roc(result, fs::path(o.roc));
  if (o.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(j, o.out);
  }
  return 0;
}

int cmd_screen(const Options& o) {
  auto m = load_model(o.ckpt);
  const auto fasta = read_fasta(o.fasta);
  const auto& receptor = pick_receptor(fasta, o.target);
  const ReceptorSource source(opt_path(o.embeddings), {receptor}, static_cast<std::uint32_t>(m->config().protein_width));
  const auto embedding = source(receptor.id);
  std::optional<RunScope> run;
  if (!o.out.empty())
    run.emplace(sidecar(o.out, ".run.json"),
                base_manifest("screen", {{"threshold", fmt(o.threshold, 6)}, {"target", receptor.id}}, 0,
                              {checkpoint_file(o.ckpt), o.fasta, o.smiles_file}));
  const auto ranked = screen::rank(screen::score_ligands(*m, embedding, read_ligands(o.smiles_file), o.batch_size));
  std::size_t passed = 0, invalid = 0;
  for (const auto& s : ranked) {
    if (!s.probability) ++invalid;
    else if (screen::passes(s, o.threshold)) ++passed;
  }
  if (o.out.empty()) {
    screen::write_table(ranked, o.threshold, std::cout);
  } else {
    {
      auto out = open_out(o.out);
      screen::write_table(ranked, o.threshold, out);
    }
    run->complete({o.out});
  }
  note(std::to_string(ranked.size() - invalid) + " scored, " + std::to_string(passed) + " above " +
       fmt(o.threshold, 2) + ", " + std::to_string(invalid) + " unparseable");
  return 0;
}

int cmd_explain(const Options& o) {
  if (o.smiles.empty() == o.smiles_file.empty()) throw InputError("give exactly one of --smiles or --smiles-file");
  auto m = load_model(o.ckpt);
  const auto fasta = read_fasta(o.fasta);
  const auto& receptor = pick_receptor(fasta, o.target);
  const ReceptorSource source(opt_path(o.embeddings), {receptor}, static_cast<std::uint32_t>(m->config().protein_width));
  const auto embedding = source(receptor.id);
  if (o.chain.size() != 1) throw InputError("--chain takes a single character");
  ExplainInputs in{&receptor, &embedding, o.pdb, o.chain[0], o.ligand_resname, o.k, o.layer_average, o.min_identity};
  std::optional<RunScope> run;
  if (!o.out.empty())
    run.emplace(sidecar(o.out, ".run.json"),
                base_manifest("explain",
                              {{"chain", o.chain}, {"ligand_resname", o.ligand_resname}, {"k", std::to_string(o.k)},
                               {"layer_average", o.layer_average ? "true" : "false"}, {"target", receptor.id}},
                              0, existing({checkpoint_file(o.ckpt), fs::path(o.fasta), fs::path(o.pdb),
                                           opt_path(o.smiles_file)})));
  const Structure s = load_structure(in);
  nlohmann::json j;
  if (!o.smiles.empty()) {
    j = explain_one(*m, in, s, o.smiles);
  } else {
    auto ranked = screen::rank(screen::score_ligands(*m, embedding, read_ligands(o.smiles_file), o.batch_size));
    j["reports"] = nlohmann::json::array();
    int taken = 0;
    for (const auto& r : ranked) {
      if (!r.probability) continue;
      if (o.min_probability >= 0 && *r.probability < o.min_probability) continue;
      if (o.top_n > 0 && taken == o.top_n) break;
      auto rep = explain_one(*m, in, s, r.ligand.smiles);
      rep["ligand_id"] = r.ligand.id;
      j["reports"].push_back(rep);
      ++taken;
    }
  }
  if (o.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json_file(j, o.out);
    run->complete({o.out});
  }
  return 0;
}

int cmd_cluster(const Options& o) {
  const fs::path dir = o.out;
  RunScope run(dir / "run.json",
               base_manifest("cluster", {{"top", std::to_string(o.top)}, {"radius", std::to_string(o.radius)},
                                         {"width", std::to_string(o.width)}},
                             0, {o.records}));
  const auto profiles = analysis::build_profiles(read_records(o.records), o.top, o.radius, o.width);
  const auto d = analysis::distance_matrix(profiles);
  const auto dg = analysis::average_linkage(d);
  analysis::export_cluster_artifacts(profiles, d, dg, dir);
  run.complete({dir / "distances.csv", dir / "dendrogram.json"});
  std::cout << "clustered " << profiles.size() << " receptors into " << dir.string() << '\n';
  return 0;
}

int cmd_pipeline(const Options& o) {
  const fs::path cfg_path = o.config;
  const fs::path base = fs::absolute(cfg_path).parent_path();
  auto overrides = o.sets;
  auto setup = resolve_config(cfg_path, overrides, pipeline_keys());
  const auto& c = setup.config;
  auto path_key = [&](const char* key) -> std::optional<fs::path> {
    if (!c.has(key)) return std::nullopt;
    return resolve_relative(base, c.get(key, ""));
  };
  const auto source_tsv = path_key("source");
  if (!source_tsv) throw InputError("pipeline config needs 'source'");
  const auto fasta = path_key("fasta");
  const auto embeddings = path_key("embeddings");
  const std::string protocol = c.get("protocol", "random");
  dataset::parse_protocol(protocol);
  const auto partition = dataset::parse_partition(c.get("eval_partition", "test"));
  const fs::path dir = o.out;
  fs::create_directories(dir);

  RunScope run(dir / "run.json", base_manifest("pipeline", c.values(), setup.train.seed,
                                               existing({cfg_path, source_tsv, fasta})));
  const fs::path positives = dir / "positives.tsv", rejects = dir / "rejects.tsv", cstats = dir / "curate_stats.json";
  const fs::path manifest = dir / "manifest.tsv", mstats = dir / "manifest_stats.json";
  const fs::path model_dir = dir / "model";
  const fs::path ckpt = model_dir / "model.ckpt", log = model_dir / "train_log.tsv";
  const fs::path metrics = dir / "metrics.json", roc = dir / "roc.csv", report = dir / "report.json";
  std::vector<fs::path> produced;

  Stage(dir, "curate", o.force).run("", {*source_tsv}, {positives, rejects, cstats},
                                    [&] { run_curate(*source_tsv, positives, rejects, cstats); });
  produced.insert(produced.end(), {positives, rejects, cstats});

  const std::string split_params = "protocol=" + protocol + "\nseed=" + std::to_string(setup.train.seed) + "\n";
  Stage(dir, "split", o.force).run(split_params, {positives}, {manifest, mstats}, [&] {
    run_split(positives, dataset::parse_protocol(protocol), setup.train.seed, manifest, mstats);
  });
  produced.insert(produced.end(), {manifest, mstats});

  std::vector<protein::ProteinRecord> sequences;
  if (fasta) sequences = read_fasta(*fasta);
  const ReceptorSource source(embeddings, sequences, static_cast<std::uint32_t>(setup.model.protein_width));
  std::vector<fs::path> feature_inputs = existing({fasta});
  if (embeddings)
    for (const auto& e : fs::directory_iterator(*embeddings))
      if (e.path().extension() == ".emb") feature_inputs.push_back(e.path());
  std::sort(feature_inputs.begin(), feature_inputs.end());

  auto train_inputs = feature_inputs;
  train_inputs.insert(train_inputs.begin(), manifest);
  Stage(dir, "train", o.force).run(train::render_config(setup.train, setup.model), train_inputs,
                                   {ckpt, log, model_dir / "resolved.cfg"},
                                   [&] { run_train(read_manifest(manifest), setup, source, model_dir); });
  produced.insert(produced.end(), {ckpt, log, model_dir / "resolved.cfg"});

  auto eval_inputs = train_inputs;
  eval_inputs.push_back(ckpt);
  Stage(dir, "eval", o.force).run("partition=" + c.get("eval_partition", "test") + "\n", eval_inputs, {metrics, roc},
                                  [&] {
                                    auto m = load_model(ckpt);
                                    const auto r =
                                        run_eval(*m, read_manifest(manifest), partition, source, setup.train.batch_size);
                                    write_json_file(metrics_json(r, c.get("eval_partition", "test")), metrics);
                                    if (r.roc_points.empty()) {
                                      auto out = open_out(roc);
                                      out << "fpr,tpr,threshold\n";
                                      note("warning: evaluation partition has one class; ROC left empty");
                                    } else {
                                      train::export_roc(r, roc);
                                    }
                                  });
  produced.insert(produced.end(), {metrics, roc});

  if (const auto pdb = path_key("pdb")) {
    if (!fasta) throw InputError("explain stage needs 'fasta'");
    const std::string target = c.get("explain_target", "");
    const std::string smiles = c.get("explain_smiles", "");
    if (target.empty() || smiles.empty()) throw InputError("explain stage needs 'explain_target' and 'explain_smiles'");
    const std::string chain = c.get("chain", "A");
    if (chain.size() != 1) throw InputError("config key 'chain' takes a single character");
    const std::string explain_params = "target=" + target + "\nsmiles=" + smiles + "\nchain=" + chain +
                                       "\nligand_resname=" + c.get("ligand_resname", "") + "\nk=" +
                                       c.get("k", std::to_string(interpret::kDefaultTopK)) +
                                       "\nlayer_average=" + c.get("layer_average", "false") + "\n";
    auto explain_inputs = feature_inputs;
    explain_inputs.insert(explain_inputs.end(), {ckpt, *pdb});
    Stage(dir, "explain", o.force).run(explain_params, explain_inputs, {report}, [&] {
      auto m = load_model(ckpt);
      const auto& receptor = pick_receptor(sequences, target);
      const auto embedding = source(receptor.id);
      ExplainInputs in{&receptor,
                       &embedding,
                       *pdb,
                       chain[0],
                       c.get("ligand_resname", ""),
                       c.get_number("k", interpret::kDefaultTopK),
                       c.get("layer_average", "false") == "true",
                       interpret::kMinAlignmentIdentity};
      if (in.ligand_resname.empty()) throw InputError("explain stage needs 'ligand_resname'");
      write_json_file(explain_one(*m, in, load_structure(in), smiles), report);
    });
    produced.push_back(report);
  }
  run.complete(produced);
  std::cout << read_json_file(metrics).dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drug-receptor interaction screening with cross-attention", "gpcrfilter"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags such as --quiet work after a subcommand
  app.set_version_flag("--version",
                       nlohmann::json{{"name", "gpcrfilter"},
                                      {"version", kToolVersion},
                                      {"checkpoint_format", std::string(model::kCheckpointMagic)},
                                      {"embedding_format", "GFEMB1"}}
                           .dump());
  app.add_flag("-q,--quiet", g_quiet, "Suppress progress messages on stderr");
  Options o;

  auto* dataset_cmd = app.add_subcommand("dataset", "Curate, split and summarize interaction records");
  dataset_cmd->require_subcommand(1);
  auto* curate = dataset_cmd->add_subcommand("curate", "Standardize and deduplicate positive interactions");
  curate->add_option("--input", o.input, "TSV of target_id, smiles, source")->required()->check(CLI::ExistingFile);
  curate->add_option("--out", o.out, "Curated positives TSV")->required();
  curate->add_option("--rejects", o.rejects, "Quarantined rows (default <out>.rejects.tsv)");
  curate->add_option("--stats", o.stats, "Statistics JSON (default <out>.stats.json)");
  auto* split = dataset_cmd->add_subcommand("split", "Assign records to train/val/test under a protocol");
  split->add_option("--input", o.input, "Curated positives TSV")->required()->check(CLI::ExistingFile);
  split->add_option("--protocol", o.protocol, "random, intra or inter")
      ->check(CLI::IsMember({"random", "intra", "inter", "intra_target", "inter_target"}));
  split->add_option("--seed", o.seed, "Random seed");
  split->add_option("--out", o.out, "Split manifest TSV")->required();
  split->add_option("--stats", o.stats, "Statistics JSON (default <out>.stats.json)");
  auto* stats = dataset_cmd->add_subcommand("stats", "Per-target frequency histogram and top targets");
  stats->add_option("--input", o.input, "Positives TSV or split manifest")->required()->check(CLI::ExistingFile);
  stats->add_option("--top", o.top, "Rows in the top-target table")->check(CLI::PositiveNumber);
  stats->add_option("--out", o.out, "JSON output (default stdout)");

  auto* chem_cmd = app.add_subcommand("chemgraph", "SMILES utilities");
  chem_cmd->require_subcommand(1);
  auto* canon = chem_cmd->add_subcommand("canon", "Canonical key of each SMILES");
  auto* fp = chem_cmd->add_subcommand("fp", "Morgan fingerprint of each SMILES, hex encoded");
  for (auto* c : {canon, fp}) {
    c->add_option("--smiles", o.smiles, "A single SMILES");
    c->add_option("--in", o.input, "File with one SMILES per line")->check(CLI::ExistingFile);
  }
  fp->add_option("--radius", o.radius, "Neighborhood radius")->check(CLI::NonNegativeNumber);
  fp->add_option("--width", o.width, "Bit width")->check(CLI::PositiveNumber);
  fp->add_flag("--bits", o.bits, "Print set bit indices instead of hex");

  auto* protein_cmd = app.add_subcommand("protein", "Receptor embedding utilities");
  protein_cmd->require_subcommand(1);
  auto* embed = protein_cmd->add_subcommand("embed-stub", "Write deterministic stand-in embeddings");
  embed->add_option("--fasta", o.fasta, "Receptor FASTA")->required()->check(CLI::ExistingFile);
  embed->add_option("--out", o.out, "Output directory of <id>.emb files")->required();
  embed->add_option("--width", o.embed_width, "Embedding width")->check(CLI::Range(8u, 1u << 20));

  auto add_features = [&](CLI::App* c) {
    c->add_option("--fasta", o.fasta, "Receptor FASTA (stub embeddings unless --embeddings is given)")
        ->check(CLI::ExistingFile);
    c->add_option("--embeddings", o.embeddings, "Directory of <id>.emb receptor embeddings")
        ->check(CLI::ExistingDirectory);
  };

  auto* train_cmd = app.add_subcommand("train", "Train a model on a split manifest");
  train_cmd->add_option("--manifest", o.manifest, "Split manifest")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--config", o.config, "key=value training config")->check(CLI::ExistingFile);
  train_cmd->add_option("--set", o.sets, "Override a config key (key=value), repeatable");
  train_cmd->add_option("--out", o.out, "Output directory")->required();
  add_features(train_cmd);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on one partition");
  eval_cmd->add_option("--ckpt", o.ckpt, "Checkpoint file or training output directory")->required()
      ->check(CLI::ExistingPath);
  eval_cmd->add_option("--manifest", o.manifest, "Split manifest (default: the one used for training)")
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--partition", o.partition, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--roc", o.roc, "Write ROC points as CSV");
  eval_cmd->add_option("--out", o.out, "Metrics JSON (default stdout)");
  eval_cmd->add_option("--batch-size", o.batch_size, "Inference batch size")->check(CLI::PositiveNumber);
  add_features(eval_cmd);

  auto* screen_cmd = app.add_subcommand("screen", "Rank candidate ligands against one receptor");
  screen_cmd->add_option("--ckpt", o.ckpt, "Checkpoint file or training output directory")->required()
      ->check(CLI::ExistingPath);
  screen_cmd->add_option("--fasta", o.fasta, "Receptor FASTA")->required()->check(CLI::ExistingFile);
  screen_cmd->add_option("--target", o.target, "FASTA id when the file has several records");
  screen_cmd->add_option("--embeddings", o.embeddings, "Directory of <id>.emb receptor embeddings")
      ->check(CLI::ExistingDirectory);
  screen_cmd->add_option("--smiles", o.smiles_file, "Ligand file: SMILES[<TAB>id] per line")->required()
      ->check(CLI::ExistingFile);
  screen_cmd->add_option("--threshold", o.threshold, "Pass when probability is strictly above this");
  screen_cmd->add_option("--out", o.out, "Ranked TSV (default stdout)");
  screen_cmd->add_option("--batch-size", o.batch_size, "Inference batch size")->check(CLI::PositiveNumber);

  auto* explain = app.add_subcommand("explain", "Attention-ranked residues against a crystal pocket");
  explain->add_option("--ckpt", o.ckpt, "Checkpoint file or training output directory")->required()
      ->check(CLI::ExistingPath);
  explain->add_option("--fasta", o.fasta, "Receptor FASTA")->required()->check(CLI::ExistingFile);
  explain->add_option("--target", o.target, "FASTA id when the file has several records");
  explain->add_option("--embeddings", o.embeddings, "Directory of <id>.emb receptor embeddings")
      ->check(CLI::ExistingDirectory);
  explain->add_option("--smiles", o.smiles, "Ligand SMILES");
  explain->add_option("--smiles-file", o.smiles_file, "Ligand file; explains the selected ligands")
      ->check(CLI::ExistingFile);
  explain->add_option("--top-n", o.top_n, "With --smiles-file: explain the N highest-scoring ligands");
  explain->add_option("--min-probability", o.min_probability,
                      "With --smiles-file: explain ligands with probability at least this");
  explain->add_option("--pdb", o.pdb, "Receptor structure")->required()->check(CLI::ExistingFile);
  explain->add_option("--chain", o.chain, "Chain id");
  explain->add_option("--ligand-resname", o.ligand_resname, "HETATM residue name of the bound ligand")->required();
  explain->add_option("--k", o.k, "Residues to rank")->check(CLI::PositiveNumber);
  explain->add_flag("--layer-average", o.layer_average, "Average attention over decoder layers too");
  explain->add_option("--min-identity", o.min_identity, "Minimum sequence identity to the chain")
      ->check(CLI::Range(0.0, 1.0));
  explain->add_option("--out", o.out, "Report JSON (default stdout)");
  explain->add_option("--batch-size", o.batch_size, "Inference batch size")->check(CLI::PositiveNumber);

  auto* cluster = app.add_subcommand("cluster", "Cluster receptors by their ligand profiles");
  cluster->add_option("--records", o.records, "Positives TSV or split manifest")->required()->check(CLI::ExistingFile);
  cluster->add_option("--top", o.top, "Receptors with the most ligands to keep")->check(CLI::PositiveNumber);
  cluster->add_option("--radius", o.radius, "Fingerprint radius")->check(CLI::NonNegativeNumber);
  cluster->add_option("--width", o.width, "Fingerprint width")->check(CLI::PositiveNumber);
  cluster->add_option("--out", o.out, "Output directory")->required();

  auto* pipeline = app.add_subcommand("pipeline", "Curate, split, train, evaluate and explain, resumably");
  pipeline->add_option("--config", o.config, "Pipeline config (key=value)")->required()->check(CLI::ExistingFile);
  pipeline->add_option("--set", o.sets, "Override a config key (key=value), repeatable");
  pipeline->add_option("--out", o.out, "Run directory")->required();
  pipeline->add_flag("--force", o.force, "Rerun every stage");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*curate) return cmd_curate(o);
    if (*split) return cmd_split(o);
    if (*stats) return cmd_stats(o);
    if (*canon) return cmd_chem(o, false);
    if (*fp) return cmd_chem(o, true);
    if (*embed) return cmd_embed_stub(o);
    if (*train_cmd) return cmd_train(o);
    if (*eval_cmd) return cmd_eval(o);
    if (*screen_cmd) return cmd_screen(o);
    if (*explain) return cmd_explain(o);
    if (*cluster) return cmd_cluster(o);
    if (*pipeline) return cmd_pipeline(o);
  } catch (const InputError& e) {
    std::cerr << "gpcrfilter: error: " << e.what() << '\n';
    return 1;
  } catch (const InvariantError& e) {
    std::cerr << "gpcrfilter: internal error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "gpcrfilter: error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "gpcrfilter: internal error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
