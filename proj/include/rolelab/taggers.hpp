#pragma once

#include <utility>
#include <vector>

#include "rolelab/autodiff.hpp"
#include "rolelab/corpus.hpp"

namespace rolelab {

// Linear scoring head over per-token inputs; the per-token distribution is
// the softmax of its logits.
struct LinearHead {
  ad::Tensor* W = nullptr;
  ad::Tensor* b = nullptr;
  int in_dim = 0;
  int out_dim = 0;
};

inline LinearHead register_linear_head(ad::ParameterSet& params, const std::string& name, int in_dim, int out_dim) {
  LinearHead head;
  head.W = &params.add(name + ".W", out_dim, in_dim);
  head.b = &params.add(name + ".b", out_dim, 1);
  head.in_dim = in_dim;
  head.out_dim = out_dim;
  return head;
}

inline int argmax(const Vec& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

template <typename Tag>
struct TagPrediction {
  std::vector<Tag> tags;
  std::vector<Vec> distributions;   // normalized per token
  std::vector<ad::NodeId> logits;   // retained for loss computation
};

template <typename Tag>
inline TagPrediction<Tag> predict_from_inputs(ad::Tape& tape, const LinearHead& head,
                                              const std::vector<ad::NodeId>& inputs) {
  TagPrediction<Tag> out;
  out.tags.reserve(inputs.size());
  out.distributions.reserve(inputs.size());
  out.logits.reserve(inputs.size());
  for (ad::NodeId in : inputs) {
    ad::NodeId logit = tape.affine(*head.W, *head.b, in);
    Vec dist = ad::softmax(tape.value(logit));
    out.tags.push_back(static_cast<Tag>(argmax(dist)));
    out.distributions.push_back(std::move(dist));
    out.logits.push_back(logit);
  }
  return out;
}

// Nameless-span tagger: encoder output -> 4 tag scores per token.
inline TagPrediction<SpanTag> predict_span_tags(ad::Tape& tape, const LinearHead& head,
                                                const std::vector<ad::NodeId>& encoded) {
  return predict_from_inputs<SpanTag>(tape, head, encoded);
}

// Head tagger: encoder output ++ span-tag encoding -> 2 scores per token.
// The span encoding is gold one-hots, predicted one-hots, or the span
// tagger's soft distribution, decided by the caller.
inline TagPrediction<HeadTag> predict_head_tags(ad::Tape& tape, const LinearHead& head,
                                                const std::vector<ad::NodeId>& encoded,
                                                const std::vector<ad::NodeId>& span_encoding) {
  if (encoded.size() != span_encoding.size()) throw ShapeError("predict_head_tags: span encoding length mismatch");
  std::vector<ad::NodeId> inputs(encoded.size());
  for (size_t t = 0; t < encoded.size(); ++t) inputs[t] = tape.concat({encoded[t], span_encoding[t]});
  return predict_from_inputs<HeadTag>(tape, head, inputs);
}

// SRL tagger: encoder output ++ per-token extras (predicate indicator,
// position, optional span/head one-hots) -> 14 scores per token.
inline TagPrediction<SRLTag> predict_srl_tags(ad::Tape& tape, const LinearHead& head,
                                              const std::vector<ad::NodeId>& encoded,
                                              const std::vector<ad::NodeId>& extras) {
  if (encoded.size() != extras.size()) throw ShapeError("predict_srl_tags: extras length mismatch");
  std::vector<ad::NodeId> inputs(encoded.size());
  for (size_t t = 0; t < encoded.size(); ++t) inputs[t] = tape.concat({encoded[t], extras[t]});
  return predict_from_inputs<SRLTag>(tape, head, inputs);
}

// Mean cross-entropy over a tag sequence.
template <typename Tag>
inline ad::NodeId sequence_loss(ad::Tape& tape, const TagPrediction<Tag>& pred, const std::vector<Tag>& gold) {
  if (pred.logits.size() != gold.size()) throw ShapeError("sequence_loss: gold length mismatch");
  std::vector<ad::NodeId> terms;
  terms.reserve(gold.size());
  for (size_t t = 0; t < gold.size(); ++t)
    terms.push_back(tape.softmax_cross_entropy(pred.logits[t], static_cast<int>(gold[t])));
  return tape.mean_of(terms);
}

template <typename Tag, int N>
inline Vec one_hot(Tag tag) {
  Vec v = Vec::Zero(N);
  v[static_cast<int>(tag)] = 1.0;
  return v;
}

inline Vec span_tag_one_hot(SpanTag t) { return one_hot<SpanTag, kNumSpanTags>(t); }
inline Vec head_tag_one_hot(HeadTag t) { return one_hot<HeadTag, kNumHeadTags>(t); }

// One head per argument span: the in-span token with maximal H-probability,
// ties broken toward the rightmost token. Total by construction.
inline std::vector<int> select_argument_heads(const std::vector<double>& head_probs,
                                              const std::vector<ArgumentSpan>& spans) {
  std::vector<int> out;
  out.reserve(spans.size());
  for (const auto& span : spans) {
    if (span.start < 0 || span.end >= static_cast<int>(head_probs.size()) || span.start > span.end)
      throw ShapeError("select_argument_heads: span out of range");
    int best = span.start;
    for (int t = span.start; t <= span.end; ++t)
      if (head_probs[static_cast<size_t>(t)] >= head_probs[static_cast<size_t>(best)]) best = t;
    out.push_back(best);
  }
  return out;
}

// Diagnostics over unconstrained head predictions: the tagger is free to
// fire outside spans, or zero/multiple times within one.
struct HeadConsistencyReport {
  long total_head_predictions = 0;
  long total_spans = 0;
  long outside_span_heads = 0;
  long zero_head_spans = 0;
  long multi_head_spans = 0;

  double outside_rate() const {
    return total_head_predictions == 0 ? 0.0
                                       : static_cast<double>(outside_span_heads) / static_cast<double>(total_head_predictions);
  }
  double zero_head_rate() const {
    return total_spans == 0 ? 0.0 : static_cast<double>(zero_head_spans) / static_cast<double>(total_spans);
  }
  double multi_head_rate() const {
    return total_spans == 0 ? 0.0 : static_cast<double>(multi_head_spans) / static_cast<double>(total_spans);
  }

  void accumulate(const HeadConsistencyReport& o) {
    total_head_predictions += o.total_head_predictions;
    total_spans += o.total_spans;
    outside_span_heads += o.outside_span_heads;
    zero_head_spans += o.zero_head_spans;
    multi_head_spans += o.multi_head_spans;
  }
};

inline HeadConsistencyReport head_consistency_report(const std::vector<HeadTag>& predicted,
                                                     const std::vector<std::pair<int, int>>& spans) {
  HeadConsistencyReport report;
  report.total_spans = static_cast<long>(spans.size());
  for (size_t t = 0; t < predicted.size(); ++t) {
    if (predicted[t] != HeadTag::H) continue;
    ++report.total_head_predictions;
    bool inside = false;
    for (const auto& [s, e] : spans)
      if (static_cast<int>(t) >= s && static_cast<int>(t) <= e) inside = true;
    if (!inside) ++report.outside_span_heads;
  }
  for (const auto& [s, e] : spans) {
    int hs = 0;
    for (int t = s; t <= e && t < static_cast<int>(predicted.size()); ++t)
      if (predicted[static_cast<size_t>(t)] == HeadTag::H) ++hs;
    if (hs == 0) ++report.zero_head_spans;
    if (hs >= 2) ++report.multi_head_spans;
  }
  return report;
}

inline HeadConsistencyReport head_consistency_report(const std::vector<HeadTag>& predicted,
                                                     const std::vector<ArgumentSpan>& spans) {
  std::vector<std::pair<int, int>> ranges;
  ranges.reserve(spans.size());
  for (const auto& s : spans) ranges.emplace_back(s.start, s.end);
  return head_consistency_report(predicted, ranges);
}

}  // namespace rolelab
