#pragma once

#include <array>
#include <vector>

#include "rolelab/config.hpp"
#include "rolelab/corpus.hpp"
#include "rolelab/embeddings.hpp"

namespace rolelab {

// One argument span prepared for SPRL: gold head (if annotated) and the
// binarized property labels. -1 marks a property that is unrated (or excluded
// by the NA policy) and contributes neither loss nor metrics.
struct SpanExample {
  int span_index = 0;
  int gold_head = -1;
  bool has_ratings = false;
  std::array<int, kNumProperties> labels;

  SpanExample() { labels.fill(-1); }
};

// A corpus instance with all model inputs precomputed. Predicted annotations
// are attached later by the upstream span/head pipeline when the experiment
// consumes predicted features.
struct InstanceData {
  const Sentence* sentence = nullptr;
  const PredicateInstance* instance = nullptr;
  int corpus_index = 0;

  std::vector<Vec> token_features;  // d+2 per token
  std::vector<SpanTag> gold_span;
  std::vector<HeadTag> gold_head;
  std::vector<SRLTag> gold_srl;
  std::vector<SpanExample> spans;        // aligned with instance->argument_spans
  std::vector<Vec> span_embeddings;      // aligned; empty when unused
  Vec sentence_embedding;                // size 0 when unused

  bool has_predictions = false;
  std::vector<SpanTag> pred_span;
  std::vector<HeadTag> pred_head;
  std::vector<double> pred_head_probs;   // P(H) per token
  std::vector<int> selected_heads;       // aligned with spans; -1 until annotated

  int length() const { return sentence->length(); }
};

using Dataset = std::vector<InstanceData>;

inline int binarize_with_policy(const Rating& rating, int threshold, NaPolicy policy) {
  if (rating.na) {
    switch (policy) {
      case NaPolicy::negative: return 0;
      case NaPolicy::positive: return 1;
      case NaPolicy::exclude: return -1;
    }
  }
  return binarize_rating(rating, threshold);
}

inline Dataset build_dataset(const Corpus& corpus, const EmbeddingProvider& provider, const ExperimentConfig& cfg,
                             const StopwordSet& stopwords) {
  Dataset data;
  data.reserve(corpus.instances.size());
  const StaticEmbeddings* static_provider =
      cfg.use_span_embedding ? dynamic_cast<const StaticEmbeddings*>(&provider) : nullptr;
  if (cfg.use_span_embedding && !static_provider)
    throw ConfigError("span embeddings require a static embedding provider");

  for (size_t i = 0; i < corpus.instances.size(); ++i) {
    const PredicateInstance& inst = corpus.instances[i];
    const Sentence& sent = corpus.sentence_of(inst);
    validate_instance(inst, sent.length());

    InstanceData item;
    item.sentence = &sent;
    item.instance = &inst;
    item.corpus_index = static_cast<int>(i);
    item.token_features = build_token_features(sent, inst.predicate_index, provider);
    item.gold_srl = gold_srl_tags(inst, sent.length());
    item.gold_span = srl_to_nameless_tags(item.gold_srl);
    item.gold_head = spans_to_head_tags(inst.argument_spans, sent.length());

    for (size_t s = 0; s < inst.argument_spans.size(); ++s) {
      const ArgumentSpan& span = inst.argument_spans[s];
      SpanExample ex;
      ex.span_index = static_cast<int>(s);
      ex.gold_head = span.head_index.value_or(-1);
      for (const auto& [prop, rating] : span.protoroles) {
        ex.labels[static_cast<size_t>(prop)] = binarize_with_policy(rating, cfg.threshold, cfg.na_policy);
        ex.has_ratings = true;
      }
      if (cfg.needs_sprl() && cfg.sprl_head_source == FeatureSource::gold && ex.has_ratings && ex.gold_head < 0)
        throw DataError("instance '" + inst.sentence_id + "': rated span [" + std::to_string(span.start) + "," +
                        std::to_string(span.end) + "] lacks a gold head but head_source=gold");
      item.spans.push_back(ex);
    }

    if (cfg.use_span_embedding) {
      for (const auto& span : inst.argument_spans)
        item.span_embeddings.push_back(span_embedding(sent, span, stopwords, *static_provider));
    }
    if (cfg.use_sentence_embedding) item.sentence_embedding = sentence_embedding(sent, provider);

    item.selected_heads.assign(inst.argument_spans.size(), -1);
    data.push_back(std::move(item));
  }
  return data;
}

}  // namespace rolelab
