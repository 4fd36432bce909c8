#pragma once

// Binary classification metrics, all reported as percentages.
//
// Threshold metrics call a score positive when p > threshold (strictly, the
// same rule the screen command applies). AUC is the Mann-Whitney statistic
// with half credit for ties; AP integrates the step-wise precision-recall
// curve over descending unique scores. Both are absent for single-class input.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

#include "gpcrfilter/error.hpp"

namespace gpcrfilter::train {

inline constexpr double kDefaultThreshold = 0.5;

struct RocPoint {
  double fpr = 0;
  double tpr = 0;
  double threshold = 0;  // +inf for the (0,0) endpoint
};

struct EvalResult {
  std::size_t count = 0;
  std::size_t positives = 0;
  double threshold = kDefaultThreshold;
  double acc = 0, precision = 0, recall = 0, f1 = 0;
  std::optional<double> auc, ap;
  std::vector<RocPoint> roc_points;  // empty for single-class input
};

namespace detail {

// Indices sorted by descending score; ties keep input order.
inline std::vector<std::size_t> descending_order(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

}  // namespace detail

inline double auc_score(const std::vector<double>& scores, const std::vector<int>& labels) {
  const auto idx = detail::descending_order(scores);
  double pos = 0, neg = 0, correct = 0;
  // Walk tie groups from the top; every negative in a group is outranked by
  // all positives seen before the group and ties with those inside it.
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    double gp = 0, gn = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? gp : gn) += 1;
      ++j;
    }
    correct += gn * (pos + 0.5 * gp);
    pos += gp;
    neg += gn;
    i = j;
  }
  return correct / (pos * neg);
}

inline double average_precision(const std::vector<double>& scores, const std::vector<int>& labels) {
  const auto idx = detail::descending_order(scores);
  double total_pos = 0;
  for (int l : labels) total_pos += l ? 1 : 0;
  double tp = 0, seen = 0, prev_recall = 0, ap = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      tp += labels[idx[j]] ? 1 : 0;
      seen += 1;
      ++j;
    }
    const double recall = tp / total_pos;
    ap += (recall - prev_recall) * (tp / seen);
    prev_recall = recall;
    i = j;
  }
  return ap;
}

inline std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
  const auto idx = detail::descending_order(scores);
  double P = 0, N = 0;
  for (int l : labels) (l ? P : N) += 1;
  std::vector<RocPoint> pts{{0.0, 0.0, std::numeric_limits<double>::infinity()}};
  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? tp : fp) += 1;
      ++j;
    }
    pts.push_back({fp / N, tp / P, scores[idx[i]]});
    i = j;
  }
  return pts;
}

inline double trapezoid_area(const std::vector<RocPoint>& pts) {
  double area = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    area += (pts[i].fpr - pts[i - 1].fpr) * (pts[i].tpr + pts[i - 1].tpr) / 2;
  return area;
}

inline EvalResult compute_metrics(const std::vector<double>& scores, const std::vector<int>& labels,
                                  double threshold = kDefaultThreshold) {
  if (scores.size() != labels.size()) throw InvariantError("compute_metrics: score/label count mismatch");
  if (scores.empty()) throw InputError("cannot compute metrics on an empty set");
  EvalResult r;
  r.count = scores.size();
  r.threshold = threshold;
  double tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw InputError("non-finite score at index " + std::to_string(i));
    const bool predicted = scores[i] > threshold;
    if (labels[i]) {
      ++r.positives;
      (predicted ? tp : fn) += 1;
    } else {
      (predicted ? fp : tn) += 1;
    }
  }
  r.acc = 100.0 * (tp + tn) / static_cast<double>(r.count);
  r.precision = tp + fp > 0 ? 100.0 * tp / (tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? 100.0 * tp / (tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0 ? 2 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  if (r.positives > 0 && r.positives < r.count) {
    r.auc = 100.0 * auc_score(scores, labels);
    r.ap = 100.0 * average_precision(scores, labels);
    r.roc_points = roc_curve(scores, labels);
  }
  return r;
}

inline void export_roc(const EvalResult& r, std::ostream& out) {
  if (r.roc_points.empty()) throw InputError("ROC curve undefined: evaluation set has a single class");
  out << "fpr,tpr,threshold\n" << std::setprecision(17);
  for (const auto& p : r.roc_points) {
    out << p.fpr << ',' << p.tpr << ',';
    if (std::isinf(p.threshold)) {
      out << "inf";
    } else {
      out << p.threshold;
    }
    out << '\n';
  }
}

inline void export_roc(const EvalResult& r, const std::filesystem::path& path) {
  if (r.roc_points.empty()) throw InputError("ROC curve undefined: evaluation set has a single class");
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  export_roc(r, out);
}

}  // namespace gpcrfilter::train
