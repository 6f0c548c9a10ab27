#pragma once

#include <vector>

#include "rolelab/dumps.hpp"
#include "rolelab/training.hpp"

namespace rolelab {

struct PredictionOutput {
  std::vector<InstanceDump> tags;
  std::vector<SprlDump> sprl;
};

// Frozen inference over a corpus, producing the dump records. When the config
// consumes predicted features in the staged setup, the upstream pipeline
// annotates the dataset first and its span/head tags are the ones dumped
// (they are what the main model actually saw).
inline PredictionOutput predict_corpus(JointModel& model, JointModel* upstream, const Corpus& corpus,
                                       const EmbeddingProvider& provider, const StopwordSet& stopwords) {
  const ExperimentConfig& cfg = model.cfg;
  Dataset data = build_dataset(corpus, provider, cfg, stopwords);
  bool staged_predictions = cfg.needs_predicted_annotations() && !cfg.joint_upstream;
  if (staged_predictions) {
    if (!upstream) throw ConfigError("predict: config consumes predicted features but no upstream model given");
    annotate_predictions(data, *upstream);
  }

  ForwardPlan plan;
  plan.run_tags = cfg.use_encoder;
  plan.run_srl = cfg.needs_srl() && cfg.use_encoder;
  plan.run_sprl = cfg.needs_sprl();

  PredictionOutput out;
  for (auto& item : data) {
    ad::Tape tape;
    InstanceForward fwd = forward_instance(tape, model, item, plan, RunMode::eval, nullptr);

    InstanceDump dump;
    dump.sentence_id = item.instance->sentence_id;
    dump.instance_index = item.corpus_index;
    dump.tokens = item.sentence->tokens;
    dump.predicate_index = item.instance->predicate_index;
    dump.gold_span = item.gold_span;
    dump.gold_head = item.gold_head;
    if (plan.run_srl) dump.gold_srl = item.gold_srl;
    if (cfg.use_encoder) {
      dump.pred_span = staged_predictions ? item.pred_span : fwd.span.tags;
      dump.pred_head = staged_predictions ? item.pred_head : fwd.head.tags;
    } else {
      dump.pred_span.assign(item.gold_span.size(), SpanTag::O);
      dump.pred_head.assign(item.gold_head.size(), HeadTag::O);
    }
    if (plan.run_srl) dump.pred_srl = fwd.srl.tags;

    // one selected head per argument span, from whatever source SPRL uses
    for (size_t s = 0; s < item.instance->argument_spans.size(); ++s) {
      const ArgumentSpan& span = item.instance->argument_spans[s];
      InstanceDump::SelectedHead sel;
      sel.start = span.start;
      sel.end = span.end;
      if (cfg.sprl_head_source == FeatureSource::gold) {
        sel.head_index = span.head_index.value_or(-1);
      } else if (staged_predictions) {
        sel.head_index = item.selected_heads[s];
      } else if (cfg.use_encoder) {
        std::vector<double> probs(static_cast<size_t>(item.length()));
        for (int t = 0; t < item.length(); ++t)
          probs[static_cast<size_t>(t)] =
              fwd.head.distributions[static_cast<size_t>(t)][static_cast<int>(HeadTag::H)];
        sel.head_index = select_argument_heads(probs, {span})[0];
      }
      dump.selected_heads.push_back(sel);
    }
    out.tags.push_back(std::move(dump));

    for (const auto& result : fwd.sprl) {
      const SpanExample& ex = item.spans[static_cast<size_t>(result.span_index)];
      const ArgumentSpan& span = item.instance->argument_spans[static_cast<size_t>(result.span_index)];
      SprlDump sd;
      sd.sentence_id = item.instance->sentence_id;
      sd.instance_index = item.corpus_index;
      sd.span_start = span.start;
      sd.span_end = span.end;
      sd.head_index = result.head_index;
      for (int p = 0; p < kNumProperties; ++p) {
        int gold = ex.labels[static_cast<size_t>(p)];
        if (gold < 0) continue;
        const auto& pr = result.predictions[static_cast<size_t>(p)];
        sd.properties[to_string(static_cast<Property>(p))] = {pr.positive_probability, pr.label, gold};
      }
      out.sprl.push_back(std::move(sd));
    }
  }
  return out;
}

}  // namespace rolelab
