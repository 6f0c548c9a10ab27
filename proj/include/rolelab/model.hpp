#pragma once

#include <array>
#include <optional>
#include <vector>

#include "rolelab/dataset.hpp"
#include "rolelab/encoder.hpp"
#include "rolelab/sprl.hpp"
#include "rolelab/taggers.hpp"

namespace rolelab {

enum class Task { span, head, srl, sprl };

inline std::string to_string(Task t) {
  switch (t) {
    case Task::span: return "span";
    case Task::head: return "head";
    case Task::srl: return "srl";
    default: return "sprl";
  }
}

// The assembled multi-task model: shared encoder, span/head/SRL tagger heads
// and the 18-classifier SPRL bank over one parameter set. All components are
// always registered (in a fixed order) so that parameter layout depends only
// on the config, not on which tasks train.
struct JointModel {
  ExperimentConfig cfg;
  int provider_dim = 0;
  ad::ParameterSet params;
  EncoderParams encoder_params;
  LinearHead span_head, head_head, srl_head;
  PropertyClassifierBank sprl_bank;

  JointModel(const ExperimentConfig& config, int embedding_dim) : cfg(config), provider_dim(embedding_dim) {
    cfg.encoder.input_dim = feature_dim();
    if (cfg.use_encoder) {
      encoder_params = register_encoder(params, cfg.encoder);
      int enc_out = cfg.encoder.output_dim();
      span_head = register_linear_head(params, "span_tagger", enc_out, kNumSpanTags);
      head_head = register_linear_head(params, "head_tagger", enc_out + kNumSpanTags, kNumHeadTags);
      srl_head = register_linear_head(params, "srl_tagger", enc_out + srl_extra_dim(), kNumSRLTags);
    }
    sprl_bank = register_property_classifiers(params, pair_width());
  }

  int feature_dim() const { return provider_dim + 2; }

  int srl_extra_dim() const {
    int extra = 2;  // predicate indicator + relative position
    if (cfg.span_source != FeatureSource::none) extra += kNumSpanTags;
    if (cfg.head_source != FeatureSource::none) extra += kNumHeadTags;
    return extra;
  }

  int pair_width() const {
    int base = cfg.use_encoder ? 2 * cfg.encoder.output_dim() : 2 * provider_dim;
    if (cfg.use_span_embedding) base += provider_dim;
    if (cfg.use_sentence_embedding) base += provider_dim;
    return base;
  }

  void init(uint64_t seed) {
    Rng rng = Rng(seed).fork(0x12a7);
    ad::init_uniform_fan_in(params, rng);
  }
};

// What one forward pass must produce.
struct ForwardPlan {
  bool run_tags = false;          // span + head taggers
  bool run_srl = false;
  bool run_sprl = false;
  bool losses = false;
  bool soft_span_to_head = false;  // pass the span distribution (train-time joint pipeline)
};

struct SprlSpanResult {
  int span_index = 0;
  int head_index = 0;
  std::array<PropertyPrediction, kNumProperties> predictions;
};

struct InstanceForward {
  std::vector<ad::NodeId> encoded;
  TagPrediction<SpanTag> span;
  TagPrediction<HeadTag> head;
  TagPrediction<SRLTag> srl;
  std::vector<SprlSpanResult> sprl;

  // loss terms; per-token for the taggers, per (span, property) for SPRL
  std::vector<ad::NodeId> span_terms, head_terms, srl_terms;
  std::array<std::vector<ad::NodeId>, kNumProperties> sprl_terms;
};

namespace detail {

inline std::optional<Vec> optional_span_embedding(const JointModel& model, const InstanceData& item, int span_index) {
  if (!model.cfg.use_span_embedding) return std::nullopt;
  return item.span_embeddings[static_cast<size_t>(span_index)];
}

inline std::optional<Vec> optional_sentence_embedding(const JointModel& model, const InstanceData& item) {
  if (!model.cfg.use_sentence_embedding) return std::nullopt;
  return item.sentence_embedding;
}

}  // namespace detail

inline InstanceForward forward_instance(ad::Tape& tape, JointModel& model, const InstanceData& item,
                                        const ForwardPlan& plan, RunMode mode, Rng* dropout_rng) {
  const ExperimentConfig& cfg = model.cfg;
  InstanceForward out;
  int length = item.length();

  if (cfg.use_encoder) {
    out.encoded = encode(tape, model.encoder_params, cfg.encoder, item.token_features, mode, dropout_rng);

    bool sprl_needs_tagger = plan.run_sprl && cfg.sprl_head_source == FeatureSource::predicted && cfg.joint_upstream;
    if (plan.run_tags || plan.run_srl || sprl_needs_tagger) {
      out.span = predict_span_tags(tape, model.span_head, out.encoded);
      std::vector<ad::NodeId> span_encoding(static_cast<size_t>(length));
      for (int t = 0; t < length; ++t) {
        if (cfg.span_source == FeatureSource::gold) {
          span_encoding[static_cast<size_t>(t)] =
              tape.constant(span_tag_one_hot(item.gold_span[static_cast<size_t>(t)]));
        } else if (plan.soft_span_to_head && mode == RunMode::train) {
          span_encoding[static_cast<size_t>(t)] = tape.softmax(out.span.logits[static_cast<size_t>(t)]);
        } else {
          span_encoding[static_cast<size_t>(t)] =
              tape.constant(span_tag_one_hot(out.span.tags[static_cast<size_t>(t)]));
        }
      }
      out.head = predict_head_tags(tape, model.head_head, out.encoded, span_encoding);
      if (plan.losses) {
        out.span_terms.reserve(static_cast<size_t>(length));
        out.head_terms.reserve(static_cast<size_t>(length));
        for (int t = 0; t < length; ++t) {
          out.span_terms.push_back(tape.softmax_cross_entropy(out.span.logits[static_cast<size_t>(t)],
                                                              static_cast<int>(item.gold_span[static_cast<size_t>(t)])));
          out.head_terms.push_back(tape.softmax_cross_entropy(out.head.logits[static_cast<size_t>(t)],
                                                              static_cast<int>(item.gold_head[static_cast<size_t>(t)])));
        }
      }
    }

    if (plan.run_srl) {
      auto tag_block = [&](int t) {
        Vec extra(model.srl_extra_dim());
        extra.setZero();
        extra[0] = t == item.instance->predicate_index ? 1.0 : 0.0;
        extra[1] = static_cast<double>(relative_position(t, item.instance->predicate_index));
        int at = 2;
        if (cfg.span_source != FeatureSource::none) {
          SpanTag tag;
          if (cfg.span_source == FeatureSource::gold) {
            tag = item.gold_span[static_cast<size_t>(t)];
          } else if (cfg.joint_upstream) {
            tag = out.span.tags[static_cast<size_t>(t)];
          } else {
            if (!item.has_predictions)
              throw DataError("predicted span features requested but instance has no annotations");
            tag = item.pred_span[static_cast<size_t>(t)];
          }
          extra.segment(at, kNumSpanTags) = span_tag_one_hot(tag);
          at += kNumSpanTags;
        }
        if (cfg.head_source != FeatureSource::none) {
          HeadTag tag;
          if (cfg.head_source == FeatureSource::gold) {
            tag = item.gold_head[static_cast<size_t>(t)];
          } else if (cfg.joint_upstream) {
            tag = out.head.tags[static_cast<size_t>(t)];
          } else {
            if (!item.has_predictions)
              throw DataError("predicted head features requested but instance has no annotations");
            tag = item.pred_head[static_cast<size_t>(t)];
          }
          extra.segment(at, kNumHeadTags) = head_tag_one_hot(tag);
          at += kNumHeadTags;
        }
        return extra;
      };
      std::vector<ad::NodeId> extras(static_cast<size_t>(length));
      for (int t = 0; t < length; ++t) extras[static_cast<size_t>(t)] = tape.constant(tag_block(t));
      out.srl = predict_srl_tags(tape, model.srl_head, out.encoded, extras);
      if (plan.losses) {
        out.srl_terms.reserve(static_cast<size_t>(length));
        for (int t = 0; t < length; ++t)
          out.srl_terms.push_back(tape.softmax_cross_entropy(out.srl.logits[static_cast<size_t>(t)],
                                                             static_cast<int>(item.gold_srl[static_cast<size_t>(t)])));
      }
    }
  }

  if (plan.run_sprl) {
    for (const SpanExample& ex : item.spans) {
      if (!ex.has_ratings) continue;
      const ArgumentSpan& span = item.instance->argument_spans[static_cast<size_t>(ex.span_index)];
      int head_index;
      if (cfg.sprl_head_source == FeatureSource::gold) {
        if (ex.gold_head < 0)
          throw DataError("instance '" + item.instance->sentence_id + "': missing gold head for SPRL");
        head_index = ex.gold_head;
      } else if (cfg.joint_upstream) {
        std::vector<double> probs(static_cast<size_t>(length));
        for (int t = 0; t < length; ++t)
          probs[static_cast<size_t>(t)] = out.head.distributions[static_cast<size_t>(t)][static_cast<int>(HeadTag::H)];
        head_index = select_argument_heads(probs, {span})[0];
      } else {
        if (!item.has_predictions)
          throw DataError("predicted heads requested for SPRL but instance has no annotations");
        head_index = item.selected_heads[static_cast<size_t>(ex.span_index)];
      }

      ad::NodeId pair;
      if (cfg.use_encoder) {
        pair = build_pair_representation(tape, out.encoded, item.instance->predicate_index, head_index,
                                         detail::optional_span_embedding(model, item, ex.span_index),
                                         detail::optional_sentence_embedding(model, item));
      } else {
        std::vector<Vec> token_vecs;
        token_vecs.reserve(item.token_features.size());
        for (const auto& f : item.token_features) token_vecs.push_back(f.head(model.provider_dim));
        pair = build_direct_pair_representation(tape, token_vecs, item.instance->predicate_index, head_index,
                                                detail::optional_span_embedding(model, item, ex.span_index),
                                                detail::optional_sentence_embedding(model, item));
      }

      SprlSpanResult result;
      result.span_index = ex.span_index;
      result.head_index = head_index;
      result.predictions = classify_properties(tape, model.sprl_bank, pair);
      if (plan.losses) {
        for (int p = 0; p < kNumProperties; ++p) {
          int label = ex.labels[static_cast<size_t>(p)];
          if (label < 0) continue;
          out.sprl_terms[static_cast<size_t>(p)].push_back(
              tape.softmax_cross_entropy(result.predictions[static_cast<size_t>(p)].logits, label));
        }
      }
      out.sprl.push_back(std::move(result));
    }
  }

  return out;
}

}  // namespace rolelab
