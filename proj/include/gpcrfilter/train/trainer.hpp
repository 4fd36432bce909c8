#pragma once

// Mini-batch Adam training with validation-AUC model selection and early
// stopping, plus batched evaluation.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpcrfilter/chem/smiles.hpp"
#include "gpcrfilter/dataset/records.hpp"
#include "gpcrfilter/error.hpp"
#include "gpcrfilter/hash.hpp"
#include "gpcrfilter/model/batch.hpp"
#include "gpcrfilter/model/model.hpp"
#include "gpcrfilter/nn/adam.hpp"
#include "gpcrfilter/protein/embedding_io.hpp"
#include "gpcrfilter/rng.hpp"
#include "gpcrfilter/train/config_file.hpp"
#include "gpcrfilter/train/metrics.hpp"

namespace gpcrfilter::train {

struct Example {
  const chem::MolGraph* ligand = nullptr;
  const protein::EmbeddingMatrix* protein = nullptr;
  int label = 0;
  std::size_t record = 0;  // index into the records the example was built from
};

// Parses each ligand and loads each receptor embedding once. Element
// addresses are stable, so examples may point into the cache.
class FeatureCache {
 public:
  using EmbeddingSource = std::function<protein::EmbeddingMatrix(const std::string& target_id)>;

  explicit FeatureCache(EmbeddingSource source) : source_(std::move(source)) {}

  const chem::MolGraph& ligand(const std::string& smiles) {
    auto it = ligands_.find(smiles);
    if (it == ligands_.end()) it = ligands_.emplace(smiles, chem::parse_smiles(smiles)).first;
    return it->second;
  }

  const protein::EmbeddingMatrix& protein(const std::string& target_id) {
    auto it = proteins_.find(target_id);
    if (it == proteins_.end()) it = proteins_.emplace(target_id, source_(target_id)).first;
    return it->second;
  }

  std::vector<Example> examples(const std::vector<dataset::InteractionRecord>& records) {
    std::vector<Example> out;
    out.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto& r = records[i];
      const std::string& smiles = r.smiles.empty() ? r.ligand_key : r.smiles;
      const chem::MolGraph* g = nullptr;
      try {
        g = &ligand(smiles);
      } catch (const ParseError& e) {
        throw InputError("record " + std::to_string(i + 1) + " (" + r.target_id + "): " + e.what());
      }
      out.push_back({g, &protein(r.target_id), r.label == dataset::Label::positive ? 1 : 0, i});
    }
    return out;
  }

 private:
  EmbeddingSource source_;
  std::map<std::string, chem::MolGraph> ligands_;
  std::map<std::string, protein::EmbeddingMatrix> proteins_;
};

template <class T>
model::BatchInput<T> make_batch(const std::vector<Example>& examples, const std::vector<std::size_t>& order,
                                std::size_t begin, std::size_t end, int protein_width) {
  std::vector<const chem::MolGraph*> ligands;
  std::vector<const protein::EmbeddingMatrix*> proteins;
  for (std::size_t i = begin; i < end; ++i) {
    ligands.push_back(examples[order[i]].ligand);
    proteins.push_back(examples[order[i]].protein);
  }
  return model::make_batch<T>(ligands, proteins, protein_width);
}

struct Scores {
  std::vector<double> probabilities;
  std::vector<int> labels;
  double mean_loss = 0;
};

// Eval-mode probabilities in example order.
template <class T>
Scores score(model::InteractionModel<T>& m, const std::vector<Example>& examples, int batch_size) {
  Scores s;
  std::vector<std::size_t> order(examples.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  double loss_sum = 0;
  for (std::size_t b = 0; b < examples.size(); b += static_cast<std::size_t>(batch_size)) {
    const std::size_t e = std::min(examples.size(), b + static_cast<std::size_t>(batch_size));
    for (const auto& p : model::predict(m, make_batch<T>(examples, order, b, e, m.config().protein_width))) {
      const int label = examples[s.probabilities.size()].label;
      s.probabilities.push_back(p.probability);
      s.labels.push_back(label);
      // Same stable form as the training loss.
      const double z = label ? p.logit_positive - p.logit_negative : p.logit_negative - p.logit_positive;
      loss_sum += z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
    }
  }
  s.mean_loss = examples.empty() ? 0.0 : loss_sum / static_cast<double>(examples.size());
  return s;
}

template <class T>
EvalResult evaluate(model::InteractionModel<T>& m, const std::vector<Example>& examples, int batch_size) {
  const Scores s = score(m, examples, batch_size);
  return compute_metrics(s.probabilities, s.labels);
}

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0;
  bool evaluated = false;
  double val_loss = 0;
  std::optional<EvalResult> val;
  bool improved = false;
};

struct TrainReport {
  std::vector<EpochLog> history;
  int best_epoch = 0;
  std::optional<double> best_val_auc;
  bool stopped_early = false;
  bool halted = false;  // the epoch callback asked to stop
};

// Trains `m` in place and leaves it holding the best validation state. The
// selection score is validation AUC; when the validation set has a single
// class it falls back to lowest validation loss. `on_epoch` returning false
// ends training after the current epoch.
template <class T>
TrainReport fit(model::InteractionModel<T>& m, const std::vector<Example>& train_set,
                const std::vector<Example>& val_set, const TrainConfig& cfg,
                const std::function<bool(const EpochLog&)>& on_epoch = {}) {
  cfg.validate();
  if (train_set.empty()) throw InputError("training partition is empty");
  if (val_set.empty()) throw InputError("validation partition is empty");

  nn::Adam<T> adam(m.parameters(), {.learning_rate = cfg.learning_rate});
  Rng shuffle_rng(hash_combine(cfg.seed, 0x5348u));
  std::vector<std::size_t> order(train_set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainReport report;
  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<nn::Tensor<T>> best_state = m.state();
  int evals_without_improvement = 0;
  const int width = m.config().protein_width;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    m.reseed_dropout(hash_combine(cfg.seed, static_cast<std::uint64_t>(epoch)));
    EpochLog log;
    log.epoch = epoch;
    double loss_sum = 0;
    int batch_id = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size), ++batch_id) {
      const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      const auto in = make_batch<T>(train_set, order, b, e, width);
      std::vector<int> labels;
      for (std::size_t i = b; i < e; ++i) labels.push_back(train_set[order[i]].label);
      adam.zero_grad();
      nn::Tape<T> tape;
      const auto loss = nn::cross_entropy(tape, m.forward(tape, in, true).logits, labels);
      const double value = static_cast<double>(tape.value(loss)[0]);
      if (!std::isfinite(value))
        throw InvariantError("non-finite training loss in batch " + std::to_string(batch_id) + " of epoch " +
                             std::to_string(epoch));
      tape.backward(loss);
      adam.step();
      loss_sum += value * static_cast<double>(e - b);
    }
    log.train_loss = loss_sum / static_cast<double>(order.size());

    if (epoch % cfg.eval_every == 0 || epoch == cfg.epochs) {
      const Scores s = score(m, val_set, cfg.batch_size);
      log.evaluated = true;
      log.val_loss = s.mean_loss;
      log.val = compute_metrics(s.probabilities, s.labels);
      const double selection = log.val->auc ? *log.val->auc : -s.mean_loss;
      if (selection > best_score) {
        best_score = selection;
        best_state = m.state();
        report.best_epoch = epoch;
        report.best_val_auc = log.val->auc;
        log.improved = true;
        evals_without_improvement = 0;
      } else {
        ++evals_without_improvement;
      }
    }
    report.history.push_back(log);
    if (on_epoch && !on_epoch(log)) {
      report.halted = true;
      break;
    }
    if (evals_without_improvement > cfg.early_stop_patience) {
      report.stopped_early = true;
      break;
    }
  }
  m.load_state(best_state);
  return report;
}

}  // namespace gpcrfilter::train
