#pragma once

#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "rolelab/corpus.hpp"

namespace rolelab {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace detail {

inline Rating parse_rating(const json& v, const std::string& where) {
  if (v.is_number_integer()) return Rating::of(v.get<int>());
  if (v.is_object() && v.contains("na") && v["na"].is_boolean() && v["na"].get<bool>()) return Rating::not_applicable();
  throw ParseError(where + ": protorole rating must be an integer or {\"na\": true}");
}

}  // namespace detail

// Parses one canonical JSON-lines record into an instance + sentence.
inline std::pair<Sentence, PredicateInstance> parse_corpus_record(const json& rec, const std::string& where) {
  if (!rec.is_object()) throw ParseError(where + ": record is not an object");
  for (const char* key : {"sentence_id", "tokens", "predicate_index"}) {
    if (!rec.contains(key)) throw ParseError(where + ": missing field '" + key + "'");
  }
  Sentence sent;
  sent.id = rec["sentence_id"].get<std::string>();
  for (const auto& tok : rec["tokens"]) {
    std::string t = tok.get<std::string>();
    if (t.empty()) throw ValidationError("instance '" + sent.id + "': empty token string");
    sent.tokens.push_back(std::move(t));
  }
  if (sent.tokens.empty()) throw ValidationError("instance '" + sent.id + "': sentence has no tokens");

  PredicateInstance inst;
  inst.sentence_id = sent.id;
  inst.predicate_index = rec["predicate_index"].get<int>();
  if (rec.contains("spans")) {
    for (const auto& s : rec["spans"]) {
      ArgumentSpan span;
      span.start = s.at("start").get<int>();
      span.end = s.at("end").get<int>();
      if (s.contains("role") && !s["role"].is_null()) {
        auto role = role_from_string(s["role"].get<std::string>());
        if (!role) throw ValidationError("instance '" + sent.id + "': unknown role '" + s["role"].get<std::string>() + "'");
        span.role = role;
      }
      if (s.contains("head_index") && !s["head_index"].is_null()) span.head_index = s["head_index"].get<int>();
      if (s.contains("protoroles")) {
        for (const auto& [name, value] : s["protoroles"].items()) {
          auto prop = property_from_string(name);
          if (!prop) throw ValidationError("instance '" + sent.id + "': unknown proto-role property '" + name + "'");
          span.protoroles[*prop] = detail::parse_rating(value, where);
        }
      }
      inst.argument_spans.push_back(std::move(span));
    }
  }
  std::sort(inst.argument_spans.begin(), inst.argument_spans.end(),
            [](const ArgumentSpan& a, const ArgumentSpan& b) { return a.start < b.start; });
  return {std::move(sent), std::move(inst)};
}

// Loads a validated corpus from a JSON-lines file. Instances whose spans lack
// role labels (no SRL annotation) are rejected: canonical files are produced
// by `convert`, which drops them.
inline Corpus load_corpus(const std::string& path, Split split) {
  std::ifstream in(path);
  if (!in) throw DataError("load_corpus: cannot open '" + path + "'");
  Corpus corpus;
  corpus.split = split;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(where + ": malformed JSON record: " + e.what());
    }
    auto [sent, inst] = parse_corpus_record(rec, where);
    validate_instance(inst, sent.length(), /*require_roles=*/true);
    corpus.add_sentence(std::move(sent));
    corpus.instances.push_back(std::move(inst));
  }
  return corpus;
}

// Serializes one instance; when `label_threshold` is set, a derived
// "protorole_labels" block is included (written by `convert`, ignored on load).
inline ordered_json serialize_instance(const PredicateInstance& inst, const Sentence& sent,
                                       std::optional<int> label_threshold = std::nullopt) {
  ordered_json rec;
  rec["sentence_id"] = inst.sentence_id;
  rec["tokens"] = sent.tokens;
  rec["predicate_index"] = inst.predicate_index;
  rec["spans"] = ordered_json::array();
  for (const auto& span : inst.argument_spans) {
    ordered_json s;
    s["start"] = span.start;
    s["end"] = span.end;
    if (span.role) s["role"] = to_string(*span.role);
    if (span.head_index) s["head_index"] = *span.head_index;
    else s["head_index"] = nullptr;
    if (!span.protoroles.empty()) {
      ordered_json pr = ordered_json::object();
      ordered_json labels = ordered_json::object();
      for (const auto& [prop, rating] : span.protoroles) {
        if (rating.na) pr[to_string(prop)] = ordered_json{{"na", true}};
        else pr[to_string(prop)] = rating.value;
        if (label_threshold) labels[to_string(prop)] = binarize_rating(rating, *label_threshold);
      }
      s["protoroles"] = pr;
      if (label_threshold) s["protorole_labels"] = labels;
    }
    rec["spans"].push_back(s);
  }
  return rec;
}

inline void save_corpus(const Corpus& corpus, const std::string& path,
                        std::optional<int> label_threshold = std::nullopt) {
  std::ofstream out(path);
  if (!out) throw DataError("save_corpus: cannot open '" + path + "' for writing");
  for (const auto& inst : corpus.instances) {
    out << serialize_instance(inst, corpus.sentence_of(inst), label_threshold).dump() << "\n";
  }
}

}  // namespace rolelab
