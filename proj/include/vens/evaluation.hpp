#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vens/tensor.hpp"

namespace vens {

enum class TaskKind { classification, labeling };

/// The K per-member probability outputs for one input, awaiting
/// aggregation. Classification members are 1xC rows; labeling members are
/// TxC with one distribution per content position.
struct PredictionSet {
  TaskKind kind = TaskKind::classification;
  std::vector<Matrix> members;
};

/// Mean of the member probability vectors and its argmax; ties break to
/// the lowest class id.
std::pair<int, RowVector> aggregate_classification(const PredictionSet& set);

/// Per-position majority vote over member argmaxes. Vote ties break to the
/// highest summed probability among the tied labels, then the lowest id.
std::vector<int> aggregate_labeling(const PredictionSet& set);

/// Exact-match labeled span, end exclusive.
struct Span {
  int start = 0;
  int end = 0;
  std::string label;

  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

/// Maximal B-X (I-X)* runs; a stray I-X opens a new span, O contributes
/// nothing. Returns spans sorted by position.
std::vector<Span> extract_spans(const std::vector<std::string>& labels);

/// Micro-averaged span counts; statistics accumulate across sentences so
/// corpus F1 comes from summed counts, not averaged per-sentence scores.
struct SpanCounts {
  std::int64_t matched = 0;
  std::int64_t predicted = 0;
  std::int64_t gold = 0;

  void add(const std::vector<Span>& pred, const std::vector<Span>& gold_spans);
  Real precision() const;  // 0 when nothing was predicted
  Real recall() const;     // 0 when there is no gold span
  Real f1() const;
};

struct F1Result {
  Real precision = 0;
  Real recall = 0;
  Real f1 = 0;
};

F1Result span_f1(const std::vector<Span>& pred, const std::vector<Span>& gold);

/// Fraction of exact matches; inputs must be nonempty and equal length.
template <typename T>
Real accuracy(const std::vector<T>& preds, const std::vector<T>& golds) {
  if (preds.empty() || golds.empty()) throw MetricError("accuracy: empty inputs");
  if (preds.size() != golds.size()) {
    throw MetricError("accuracy: " + std::to_string(preds.size()) + " predictions vs " +
                      std::to_string(golds.size()) + " golds");
  }
  std::size_t hit = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == golds[i]) ++hit;
  }
  return static_cast<Real>(hit) / static_cast<Real>(preds.size());
}

}  // namespace vens
