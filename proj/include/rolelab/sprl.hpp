#pragma once

#include <array>
#include <optional>
#include <vector>

#include "rolelab/taggers.hpp"

namespace rolelab {

// 18 independent binary classifiers over the predicate/argument pair
// representation; no weight sharing between properties.
struct PropertyClassifierBank {
  std::array<LinearHead, kNumProperties> heads;
  int pair_width = 0;
};

inline PropertyClassifierBank register_property_classifiers(ad::ParameterSet& params, int pair_width,
                                                            const std::string& prefix = "sprl") {
  PropertyClassifierBank bank;
  bank.pair_width = pair_width;
  for (int p = 0; p < kNumProperties; ++p)
    bank.heads[static_cast<size_t>(p)] =
        register_linear_head(params, prefix + "." + to_string(static_cast<Property>(p)), pair_width, 2);
  return bank;
}

// Fixed concatenation order: encoded predicate ++ encoded head ++ optional
// span embedding ++ optional sentence embedding.
inline ad::NodeId build_pair_representation(ad::Tape& tape, const std::vector<ad::NodeId>& encoded,
                                            int predicate_index, int head_index,
                                            const std::optional<Vec>& span_emb = std::nullopt,
                                            const std::optional<Vec>& sentence_emb = std::nullopt) {
  if (predicate_index < 0 || predicate_index >= static_cast<int>(encoded.size()))
    throw ShapeError("build_pair_representation: predicate index out of range");
  if (head_index < 0 || head_index >= static_cast<int>(encoded.size()))
    throw ShapeError("build_pair_representation: head index out of range");
  std::vector<ad::NodeId> parts = {encoded[static_cast<size_t>(predicate_index)],
                                   encoded[static_cast<size_t>(head_index)]};
  if (span_emb) parts.push_back(tape.constant(*span_emb));
  if (sentence_emb) parts.push_back(tape.constant(*sentence_emb));
  return tape.concat(std::span<const ad::NodeId>(parts.data(), parts.size()));
}

// Pair representation without an encoder: provider token vectors straight
// into the classifiers (the logistic-regression configuration).
inline ad::NodeId build_direct_pair_representation(ad::Tape& tape, const std::vector<Vec>& token_vectors,
                                                   int predicate_index, int head_index,
                                                   const std::optional<Vec>& span_emb = std::nullopt,
                                                   const std::optional<Vec>& sentence_emb = std::nullopt) {
  if (predicate_index < 0 || predicate_index >= static_cast<int>(token_vectors.size()))
    throw ShapeError("build_direct_pair_representation: predicate index out of range");
  if (head_index < 0 || head_index >= static_cast<int>(token_vectors.size()))
    throw ShapeError("build_direct_pair_representation: head index out of range");
  std::vector<ad::NodeId> parts = {tape.constant(token_vectors[static_cast<size_t>(predicate_index)]),
                                   tape.constant(token_vectors[static_cast<size_t>(head_index)])};
  if (span_emb) parts.push_back(tape.constant(*span_emb));
  if (sentence_emb) parts.push_back(tape.constant(*sentence_emb));
  return tape.concat(std::span<const ad::NodeId>(parts.data(), parts.size()));
}

struct PropertyPrediction {
  double positive_probability = 0.0;
  int label = 0;  // argmax over {negative, positive}; tie breaks negative
  ad::NodeId logits = -1;
};

// Runs all 18 classifiers on one pair representation.
inline std::array<PropertyPrediction, kNumProperties> classify_properties(ad::Tape& tape,
                                                                          const PropertyClassifierBank& bank,
                                                                          ad::NodeId pair) {
  if (tape.value(pair).size() != bank.pair_width)
    throw ShapeError("classify_properties: pair width " + std::to_string(tape.value(pair).size()) +
                     " != classifier width " + std::to_string(bank.pair_width));
  std::array<PropertyPrediction, kNumProperties> out;
  for (int p = 0; p < kNumProperties; ++p) {
    const LinearHead& head = bank.heads[static_cast<size_t>(p)];
    ad::NodeId logits = tape.affine(*head.W, *head.b, pair);
    Vec dist = ad::softmax(tape.value(logits));
    out[static_cast<size_t>(p)] = PropertyPrediction{dist[1], dist[1] > dist[0] ? 1 : 0, logits};
  }
  return out;
}

}  // namespace rolelab
