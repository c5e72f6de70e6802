#include "vens/evaluation.hpp"

#include <algorithm>

namespace vens {

namespace {

void check_members(const PredictionSet& set) {
  if (set.members.empty()) throw AggregationError("aggregation over empty member list");
  const Index rows = set.members.front().rows();
  const Index cols = set.members.front().cols();
  for (const auto& m : set.members) {
    if (m.rows() != rows || m.cols() != cols) {
      throw AggregationError("member shape mismatch: (" + std::to_string(m.rows()) + "x" +
                             std::to_string(m.cols()) + ") vs (" + std::to_string(rows) +
                             "x" + std::to_string(cols) + ")");
    }
    for (Index i = 0; i < rows; ++i) {
      if (std::abs(m.row(i).sum() - 1.0) > 1e-6) {
        throw AggregationError("member row does not sum to 1");
      }
    }
  }
}

int argmax_lowest(const RowVector& v) {
  int best = 0;
  for (int c = 1; c < v.size(); ++c) {
    if (v(c) > v(best)) best = c;
  }
  return best;
}

}  // namespace

std::pair<int, RowVector> aggregate_classification(const PredictionSet& set) {
  if (set.kind != TaskKind::classification) {
    throw AggregationError("aggregate_classification on a labeling prediction set");
  }
  check_members(set);
  RowVector mean = RowVector::Zero(set.members.front().cols());
  for (const auto& m : set.members) mean += m.row(0);
  mean /= static_cast<Real>(set.members.size());
  return {argmax_lowest(mean), mean};
}

std::vector<int> aggregate_labeling(const PredictionSet& set) {
  if (set.kind != TaskKind::labeling) {
    throw AggregationError("aggregate_labeling on a classification prediction set");
  }
  check_members(set);
  const Index positions = set.members.front().rows();
  const Index classes = set.members.front().cols();

  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(positions));
  std::vector<int> votes(static_cast<std::size_t>(classes));
  for (Index t = 0; t < positions; ++t) {
    std::fill(votes.begin(), votes.end(), 0);
    RowVector summed = RowVector::Zero(classes);
    for (const auto& m : set.members) {
      ++votes[static_cast<std::size_t>(argmax_lowest(m.row(t)))];
      summed += m.row(t);
    }
    const int top = *std::max_element(votes.begin(), votes.end());
    int chosen = -1;
    Real chosen_mass = -1.0;
    for (int c = 0; c < classes; ++c) {
      if (votes[static_cast<std::size_t>(c)] != top) continue;
      if (summed(c) > chosen_mass) {
        chosen = c;
        chosen_mass = summed(c);
      }
    }
    out.push_back(chosen);
  }
  return out;
}

std::vector<Span> extract_spans(const std::vector<std::string>& labels) {
  std::vector<Span> spans;
  int start = -1;
  std::string kind;
  auto close = [&](int end) {
    if (start >= 0) spans.push_back(Span{start, end, kind});
    start = -1;
    kind.clear();
  };
  for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
    const std::string& l = labels[static_cast<std::size_t>(i)];
    if (l.size() >= 2 && (l[0] == 'B' || l[0] == 'I') && l[1] == '-') {
      const std::string t = l.substr(2);
      const bool continues = l[0] == 'I' && start >= 0 && t == kind;
      if (!continues) {
        close(i);
        start = i;
        kind = t;
      }
    } else {
      close(i);
    }
  }
  close(static_cast<int>(labels.size()));
  std::sort(spans.begin(), spans.end());
  return spans;
}

void SpanCounts::add(const std::vector<Span>& pred, const std::vector<Span>& gold_spans) {
  predicted += static_cast<std::int64_t>(pred.size());
  gold += static_cast<std::int64_t>(gold_spans.size());
  for (const auto& s : pred) {
    if (std::find(gold_spans.begin(), gold_spans.end(), s) != gold_spans.end()) ++matched;
  }
}

Real SpanCounts::precision() const {
  return predicted == 0 ? 0.0 : static_cast<Real>(matched) / static_cast<Real>(predicted);
}

Real SpanCounts::recall() const {
  return gold == 0 ? 0.0 : static_cast<Real>(matched) / static_cast<Real>(gold);
}

Real SpanCounts::f1() const {
  const Real p = precision();
  const Real r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

F1Result span_f1(const std::vector<Span>& pred, const std::vector<Span>& gold) {
  SpanCounts counts;
  counts.add(pred, gold);
  return F1Result{counts.precision(), counts.recall(), counts.f1()};
}

}  // namespace vens
