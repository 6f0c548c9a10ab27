#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rolelab/common.hpp"

namespace rolelab {

// ---------------------------------------------------------------------------
// Proto-role properties
// ---------------------------------------------------------------------------

enum class Property : int {
  awareness,
  change_of_location,
  change_of_state,
  changes_possession,
  existed_after,
  existed_before,
  existed_during,
  exists_as_physical,
  instigation,
  location_of_event,
  makes_physical_contact,
  manipulated_by_another,
  pred_changed_arg,
  sentient,
  stationary,
  volition,
  created,
  destroyed,
};

inline constexpr int kNumProperties = 18;

inline const std::array<std::string, kNumProperties>& property_names() {
  static const std::array<std::string, kNumProperties> names = {
      "awareness",        "change_of_location",     "change_of_state",
      "changes_possession", "existed_after",        "existed_before",
      "existed_during",   "exists_as_physical",     "instigation",
      "location_of_event", "makes_physical_contact", "manipulated_by_another",
      "pred_changed_arg", "sentient",               "stationary",
      "volition",         "created",                "destroyed"};
  return names;
}

inline const std::string& to_string(Property p) { return property_names()[static_cast<int>(p)]; }

inline std::optional<Property> property_from_string(const std::string& name) {
  const auto& names = property_names();
  for (int i = 0; i < kNumProperties; ++i) {
    if (names[i] == name) return static_cast<Property>(i);
  }
  return std::nullopt;
}

// A single human rating: 1..5, or not-applicable.
struct Rating {
  int value = 0;
  bool na = false;

  static Rating not_applicable() { return Rating{0, true}; }
  static Rating of(int v) { return Rating{v, false}; }

  bool operator==(const Rating& o) const { return na == o.na && (na || value == o.value); }
};

// 1 iff the rating is numeric and strictly above the threshold; NA maps to 0.
inline int binarize_rating(const Rating& rating, int threshold) {
  if (threshold < 1 || threshold > 4) throw ConfigError("binarize_rating: threshold must be in 1..4, got " + std::to_string(threshold));
  if (rating.na) return 0;
  if (rating.value < 1 || rating.value > 5) throw DataError("binarize_rating: rating outside 1..5: " + std::to_string(rating.value));
  return rating.value > threshold ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Roles and tag sets
// ---------------------------------------------------------------------------

enum class Role : int { A0, A1, A2, A3, A4, A5 };
inline constexpr int kNumRoles = 6;

inline std::string to_string(Role r) { return "A" + std::to_string(static_cast<int>(r)); }

inline std::optional<Role> role_from_string(const std::string& s) {
  if (s.size() == 2 && s[0] == 'A' && s[1] >= '0' && s[1] <= '5') return static_cast<Role>(s[1] - '0');
  return std::nullopt;
}

// 14-way SRL tag set, in the row order used by the report tables:
// B-V, then B-A<k>/I-A<k> pairs, then O.
enum class SRLTag : int {
  B_V,
  B_A0, I_A0,
  B_A1, I_A1,
  B_A2, I_A2,
  B_A3, I_A3,
  B_A4, I_A4,
  B_A5, I_A5,
  O,
};
inline constexpr int kNumSRLTags = 14;

inline SRLTag srl_begin_tag(Role r) { return static_cast<SRLTag>(1 + 2 * static_cast<int>(r)); }
inline SRLTag srl_inside_tag(Role r) { return static_cast<SRLTag>(2 + 2 * static_cast<int>(r)); }

inline bool is_begin_arg(SRLTag t) {
  int i = static_cast<int>(t);
  return i >= 1 && i <= 12 && (i % 2 == 1);
}
inline bool is_inside_arg(SRLTag t) {
  int i = static_cast<int>(t);
  return i >= 2 && i <= 12 && (i % 2 == 0);
}
inline Role srl_tag_role(SRLTag t) { return static_cast<Role>((static_cast<int>(t) - 1) / 2); }

inline std::string to_string(SRLTag t) {
  if (t == SRLTag::B_V) return "B-V";
  if (t == SRLTag::O) return "O";
  Role r = srl_tag_role(t);
  return (is_begin_arg(t) ? "B-" : "I-") + to_string(r);
}

inline std::optional<SRLTag> srl_tag_from_string(const std::string& s) {
  if (s == "B-V") return SRLTag::B_V;
  if (s == "O") return SRLTag::O;
  if (s.size() == 4 && (s[0] == 'B' || s[0] == 'I') && s[1] == '-') {
    auto role = role_from_string(s.substr(2));
    if (role) return s[0] == 'B' ? srl_begin_tag(*role) : srl_inside_tag(*role);
  }
  return std::nullopt;
}

// 4-way nameless-span tag set.
enum class SpanTag : int { B_A, I_A, B_V, O };
inline constexpr int kNumSpanTags = 4;

inline std::string to_string(SpanTag t) {
  switch (t) {
    case SpanTag::B_A: return "B-A";
    case SpanTag::I_A: return "I-A";
    case SpanTag::B_V: return "B-V";
    default: return "O";
  }
}

inline std::optional<SpanTag> span_tag_from_string(const std::string& s) {
  if (s == "B-A") return SpanTag::B_A;
  if (s == "I-A") return SpanTag::I_A;
  if (s == "B-V") return SpanTag::B_V;
  if (s == "O") return SpanTag::O;
  return std::nullopt;
}

// 2-way head tag set.
enum class HeadTag : int { H, O };
inline constexpr int kNumHeadTags = 2;

inline std::string to_string(HeadTag t) { return t == HeadTag::H ? "H" : "O"; }

inline std::optional<HeadTag> head_tag_from_string(const std::string& s) {
  if (s == "H") return HeadTag::H;
  if (s == "O") return HeadTag::O;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Sentences, spans, instances
// ---------------------------------------------------------------------------

struct Sentence {
  std::string id;
  std::vector<std::string> tokens;

  int length() const { return static_cast<int>(tokens.size()); }
};

// Contiguous token range with inclusive end; all indices 0-based.
struct ArgumentSpan {
  int start = 0;
  int end = 0;
  std::optional<Role> role;
  std::optional<int> head_index;
  std::map<Property, Rating> protoroles;

  bool contains(int t) const { return t >= start && t <= end; }
  int length() const { return end - start + 1; }
};

struct PredicateInstance {
  std::string sentence_id;
  int predicate_index = 0;
  std::vector<ArgumentSpan> argument_spans;
};

enum class Split { train, dev, test };

inline std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    default: return "test";
  }
}

inline std::optional<Split> split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "dev") return Split::dev;
  if (s == "test") return Split::test;
  return std::nullopt;
}

class Corpus {
 public:
  Split split = Split::train;
  std::vector<Sentence> sentences;
  std::vector<PredicateInstance> instances;

  const Sentence& sentence_of(const PredicateInstance& inst) const {
    auto it = index_.find(inst.sentence_id);
    if (it == index_.end()) throw ValidationError("instance references unknown sentence '" + inst.sentence_id + "'");
    return sentences[it->second];
  }

  const Sentence* find_sentence(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &sentences[it->second];
  }

  // Registers a sentence, merging exact duplicates. Mismatched tokens under
  // the same id are a validation error.
  void add_sentence(Sentence s) {
    auto it = index_.find(s.id);
    if (it != index_.end()) {
      if (sentences[it->second].tokens != s.tokens)
        throw ValidationError("sentence '" + s.id + "' appears with conflicting token sequences");
      return;
    }
    index_[s.id] = sentences.size();
    sentences.push_back(std::move(s));
  }

 private:
  std::map<std::string, size_t> index_;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

// Checks ArgumentSpan + PredicateInstance invariants against a sentence of
// length L. Throws ValidationError with the offending instance id.
inline void validate_instance(const PredicateInstance& inst, int length, bool require_roles = true) {
  const std::string where = "instance '" + inst.sentence_id + "' predicate " + std::to_string(inst.predicate_index);
  if (inst.predicate_index < 0 || inst.predicate_index >= length)
    throw ValidationError(where + ": predicate_index out of range");
  std::vector<char> covered(static_cast<size_t>(length), 0);
  for (const auto& span : inst.argument_spans) {
    if (span.start > span.end) throw ValidationError(where + ": span start > end");
    if (span.start < 0 || span.end >= length) throw ValidationError(where + ": span out of range");
    if (span.contains(inst.predicate_index)) throw ValidationError(where + ": span contains the predicate");
    if (require_roles && !span.role) throw ValidationError(where + ": span lacks a role label (no SRL annotation)");
    if (span.head_index && !span.contains(*span.head_index))
      throw ValidationError(where + ": head_index outside its span");
    for (int t = span.start; t <= span.end; ++t) {
      if (covered[static_cast<size_t>(t)]) throw ValidationError(where + ": overlapping argument spans");
      covered[static_cast<size_t>(t)] = 1;
    }
  }
}

// ---------------------------------------------------------------------------
// BIO tag conversions
// ---------------------------------------------------------------------------

// Gold spans + predicate position -> 14-way tag sequence of length L.
inline std::vector<SRLTag> spans_to_srl_tags(const std::vector<ArgumentSpan>& spans, int predicate_index, int length) {
  std::vector<SRLTag> tags(static_cast<size_t>(length), SRLTag::O);
  if (predicate_index < 0 || predicate_index >= length) throw ValidationError("spans_to_srl_tags: predicate_index out of range");
  tags[static_cast<size_t>(predicate_index)] = SRLTag::B_V;
  for (const auto& span : spans) {
    if (!span.role) throw ValidationError("spans_to_srl_tags: span lacks a role");
    if (span.start > span.end || span.start < 0 || span.end >= length)
      throw ValidationError("spans_to_srl_tags: span out of range");
    for (int t = span.start; t <= span.end; ++t) {
      if (tags[static_cast<size_t>(t)] != SRLTag::O)
        throw ValidationError("spans_to_srl_tags: overlapping spans (or span over the predicate)");
      tags[static_cast<size_t>(t)] = (t == span.start) ? srl_begin_tag(*span.role) : srl_inside_tag(*span.role);
    }
  }
  return tags;
}

struct DecodedTags {
  std::optional<int> predicate_index;
  std::vector<ArgumentSpan> spans;  // roles always set, sorted by start
};

// Greedy total BIO decoder. A span opens at B-A<k> and extends over
// consecutive I-A<k>; an orphan I-A<k> opens a new span. The first B-V is
// taken as the predicate.
inline DecodedTags srl_tags_to_spans(const std::vector<SRLTag>& tags) {
  if (tags.empty()) throw ValidationError("srl_tags_to_spans: empty tag sequence");
  DecodedTags out;
  std::optional<Role> open_role;
  int open_start = -1;
  auto close = [&](int end) {
    if (open_role) {
      ArgumentSpan s;
      s.start = open_start;
      s.end = end;
      s.role = open_role;
      out.spans.push_back(s);
      open_role.reset();
    }
  };
  for (int t = 0; t < static_cast<int>(tags.size()); ++t) {
    SRLTag tag = tags[static_cast<size_t>(t)];
    if (tag == SRLTag::B_V) {
      close(t - 1);
      if (!out.predicate_index) out.predicate_index = t;
    } else if (is_begin_arg(tag)) {
      close(t - 1);
      open_role = srl_tag_role(tag);
      open_start = t;
    } else if (is_inside_arg(tag)) {
      Role r = srl_tag_role(tag);
      if (open_role && *open_role == r) continue;  // extends the open span
      close(t - 1);                                // orphan I: repaired to a begin
      open_role = r;
      open_start = t;
    } else {
      close(t - 1);
    }
  }
  close(static_cast<int>(tags.size()) - 1);
  return out;
}

// Role erasure: B-A<k> -> B-A, I-A<k> -> I-A.
inline std::vector<SpanTag> srl_to_nameless_tags(const std::vector<SRLTag>& tags) {
  std::vector<SpanTag> out;
  out.reserve(tags.size());
  for (SRLTag t : tags) {
    if (t == SRLTag::B_V) out.push_back(SpanTag::B_V);
    else if (t == SRLTag::O) out.push_back(SpanTag::O);
    else out.push_back(is_begin_arg(t) ? SpanTag::B_A : SpanTag::I_A);
  }
  return out;
}

// Nameless decoder used by diagnostics: spans over B-A/I-A runs.
inline std::vector<std::pair<int, int>> nameless_tags_to_spans(const std::vector<SpanTag>& tags) {
  std::vector<std::pair<int, int>> spans;
  int open = -1;
  for (int t = 0; t < static_cast<int>(tags.size()); ++t) {
    SpanTag tag = tags[static_cast<size_t>(t)];
    if (tag == SpanTag::B_A) {
      if (open >= 0) spans.emplace_back(open, t - 1);
      open = t;
    } else if (tag == SpanTag::I_A) {
      if (open < 0) open = t;  // orphan I repaired to a begin
    } else {
      if (open >= 0) spans.emplace_back(open, t - 1);
      open = -1;
    }
  }
  if (open >= 0) spans.emplace_back(open, static_cast<int>(tags.size()) - 1);
  return spans;
}

// Gold head tags for a tagged instance: H at each annotated head index.
inline std::vector<HeadTag> spans_to_head_tags(const std::vector<ArgumentSpan>& spans, int length) {
  std::vector<HeadTag> tags(static_cast<size_t>(length), HeadTag::O);
  for (const auto& span : spans) {
    if (span.head_index) tags[static_cast<size_t>(*span.head_index)] = HeadTag::H;
  }
  return tags;
}

inline std::vector<SpanTag> gold_span_tags(const PredicateInstance& inst, int length) {
  return srl_to_nameless_tags(spans_to_srl_tags(inst.argument_spans, inst.predicate_index, length));
}

inline std::vector<SRLTag> gold_srl_tags(const PredicateInstance& inst, int length) {
  return spans_to_srl_tags(inst.argument_spans, inst.predicate_index, length);
}

}  // namespace rolelab
