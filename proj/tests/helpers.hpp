#pragma once

// Shared fixtures for the unit and acceptance suites: temp directories,
// exhaustive span-set enumeration, and synthetic corpora/embeddings.

#include <unistd.h>

#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "rolelab/common.hpp"
#include "rolelab/corpus.hpp"
#include "rolelab/embeddings.hpp"

namespace testutil {

inline rolelab::Vec seeded_vec(int dim, uint64_t seed) {
  rolelab::Rng rng(seed);
  rolelab::Vec v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.uniform(-1.0, 1.0);
  return v;
}

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("rolelab_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Enumerates every well-formed span configuration with sentence length <= max_len
// and at most two role-labelled spans, and feeds each to `fn(pred, spans, L)`.
// Spans are pairwise disjoint, exclude the predicate, and carry all role
// combinations from A0..A5.
inline void enumerate_span_sets(int max_len,
                                const std::function<void(int, const std::vector<rolelab::ArgumentSpan>&, int)>& fn) {
  using rolelab::ArgumentSpan;
  using rolelab::Role;
  for (int len = 1; len <= max_len; ++len) {
    for (int pred = 0; pred < len; ++pred) {
      // intervals not containing pred
      std::vector<std::pair<int, int>> intervals;
      for (int s = 0; s < len; ++s)
        for (int e = s; e < len; ++e)
          if (!(s <= pred && pred <= e)) intervals.emplace_back(s, e);

      fn(pred, {}, len);  // zero spans
      for (auto [s, e] : intervals) {
        for (int r = 0; r < rolelab::kNumRoles; ++r) {
          ArgumentSpan a;
          a.start = s;
          a.end = e;
          a.role = static_cast<Role>(r);
          fn(pred, {a}, len);
        }
      }
      for (size_t i = 0; i < intervals.size(); ++i) {
        for (size_t j = 0; j < intervals.size(); ++j) {
          auto [s1, e1] = intervals[i];
          auto [s2, e2] = intervals[j];
          if (s2 <= e1) continue;  // keep ordered, disjoint pairs
          for (int r1 = 0; r1 < rolelab::kNumRoles; ++r1) {
            for (int r2 = 0; r2 < rolelab::kNumRoles; ++r2) {
              rolelab::ArgumentSpan a, b;
              a.start = s1;
              a.end = e1;
              a.role = static_cast<Role>(r1);
              b.start = s2;
              b.end = e2;
              b.role = static_cast<Role>(r2);
              fn(pred, {a, b}, len);
            }
          }
        }
      }
    }
  }
}

// Deterministic synthetic corpus: "the <N1> <V> the <N2>" sentences with two
// rated argument spans, plus occasional "... near <N3>" A2 spans without
// ratings. Property labels are a fixed function of (noun, verb, property), so
// a small model can memorize them.
inline rolelab::Corpus make_toy_corpus(int n_instances, uint64_t seed, const std::string& id_prefix = "toy") {
  using namespace rolelab;
  static const std::vector<std::string> animate = {"cat", "dog", "girl", "boy", "bird", "farmer"};
  static const std::vector<std::string> inanimate = {"rock", "cake", "door", "ball", "book", "fence"};
  static const std::vector<std::string> verbs = {"ate", "saw", "broke", "moved", "held"};
  auto hash = [](const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  };

  Rng rng(seed);
  Corpus corpus;
  for (int i = 0; i < n_instances; ++i) {
    bool subj_animate = rng.bernoulli(0.5);
    std::string n1 = subj_animate ? animate[static_cast<size_t>(rng.uniform_int(6))]
                                  : inanimate[static_cast<size_t>(rng.uniform_int(6))];
    std::string n2 = inanimate[static_cast<size_t>(rng.uniform_int(6))];
    std::string verb = verbs[static_cast<size_t>(rng.uniform_int(5))];
    bool with_pp = rng.bernoulli(0.3);

    Sentence sent;
    sent.id = id_prefix + "-" + std::to_string(i);
    sent.tokens = {"the", n1, verb, "the", n2};
    if (with_pp) {
      sent.tokens.push_back("near");
      sent.tokens.push_back(inanimate[static_cast<size_t>(rng.uniform_int(6))]);
    }

    PredicateInstance inst;
    inst.sentence_id = sent.id;
    inst.predicate_index = 2;

    auto rate_span = [&](const std::string& noun) {
      std::map<Property, Rating> ratings;
      for (int p = 0; p < kNumProperties; ++p) {
        std::string prop_name = to_string(static_cast<Property>(p));
        uint64_t h = hash(noun + "|" + verb + "|" + prop_name);
        if (h % 11 == 0) ratings[static_cast<Property>(p)] = Rating::not_applicable();
        else ratings[static_cast<Property>(p)] = Rating::of(1 + static_cast<int>(h % 5));
      }
      return ratings;
    };

    ArgumentSpan a0;
    a0.start = 0;
    a0.end = 1;
    a0.role = Role::A0;
    a0.head_index = 1;
    a0.protoroles = rate_span(n1);
    ArgumentSpan a1;
    a1.start = 3;
    a1.end = 4;
    a1.role = Role::A1;
    a1.head_index = 4;
    a1.protoroles = rate_span(n2);
    inst.argument_spans = {a0, a1};
    if (with_pp) {
      ArgumentSpan a2;
      a2.start = 5;
      a2.end = 6;
      a2.role = Role::A2;
      a2.head_index = 6;
      inst.argument_spans.push_back(a2);  // no ratings: SRL-only span
    }

    corpus.add_sentence(sent);
    corpus.instances.push_back(std::move(inst));
  }
  return corpus;
}

inline std::vector<std::string> toy_vocabulary() {
  return {"the",  "cat",  "dog",  "girl", "boy",  "bird", "farmer", "rock", "cake",
          "door", "ball", "book", "fence", "ate",  "saw",  "broke",  "moved", "held",
          "near"};
}

inline rolelab::StaticEmbeddings make_toy_embeddings(int dim, uint64_t seed) {
  std::map<std::string, rolelab::Vec> table;
  uint64_t k = 0;
  for (const auto& tok : toy_vocabulary()) table[tok] = seeded_vec(dim, seed * 977 + (k++));
  return rolelab::StaticEmbeddings(std::move(table), dim);
}

inline void write_toy_embedding_file(const std::string& path, int dim, uint64_t seed) {
  std::ofstream out(path);
  uint64_t k = 0;
  for (const auto& tok : toy_vocabulary()) {
    rolelab::Vec v = seeded_vec(dim, seed * 977 + (k++));
    out << tok;
    for (int i = 0; i < dim; ++i) {
      char buf[32];
      snprintf(buf, sizeof(buf), "%.9g", v[i]);
      out << " " << buf;
    }
    out << "\n";
  }
}

// Writes a toy three-file source directory for the converter. Adds one
// sentence with ratings but no SRL entry (dropped whole) and one sentence
// with no annotations at all.
inline void write_toy_source_dir(const std::string& dir, int n_train, int n_dev, int n_test, uint64_t seed) {
  using namespace rolelab;
  std::ofstream sentences(dir + "/sentences.tsv");
  std::ofstream srl(dir + "/srl.tsv");
  std::ofstream protoroles(dir + "/protoroles.tsv");

  auto emit = [&](const Corpus& corpus, const std::string& split) {
    for (const auto& sent : corpus.sentences) {
      sentences << sent.id << "\t" << split << "\t";
      for (size_t t = 0; t < sent.tokens.size(); ++t) sentences << (t ? " " : "") << sent.tokens[t];
      sentences << "\n";
    }
    for (const auto& inst : corpus.instances) {
      srl << inst.sentence_id << "\t" << inst.predicate_index << "\t";
      for (size_t s = 0; s < inst.argument_spans.size(); ++s) {
        const auto& span = inst.argument_spans[s];
        srl << (s ? ";" : "") << span.start << ":" << span.end << ":" << to_string(*span.role);
        if (span.head_index) srl << ":" << *span.head_index;
      }
      if (inst.argument_spans.empty()) srl << "-";
      srl << "\n";
      for (const auto& span : inst.argument_spans) {
        for (const auto& [prop, rating] : span.protoroles) {
          protoroles << inst.sentence_id << "\t" << inst.predicate_index << "\t" << span.start << "\t" << span.end
                     << "\t" << to_string(prop) << "\t" << (rating.na ? std::string("NA") : std::to_string(rating.value))
                     << "\t" << (rating.na ? "false" : "true") << "\n";
        }
      }
    }
  };
  emit(make_toy_corpus(n_train, seed, "train"), "train");
  emit(make_toy_corpus(n_dev, seed + 1, "dev"), "dev");
  emit(make_toy_corpus(n_test, seed + 2, "test"), "test");

  // rated predicate with no SRL entry: the whole sentence gets dropped
  sentences << "orphan-0\ttrain\tthe dog barked\n";
  protoroles << "orphan-0\t2\t0\t1\tvolition\t4\ttrue\n";
  // listed but never annotated
  sentences << "silent-0\ttrain\tnothing happens here\n";
}

// Deterministic pseudo-contextual cache for a corpus: token vectors mix a
// token-identity component with a sentence-context component, so the same
// token type gets different vectors in different sentences.
inline void write_contextual_cache(const std::string& dir, const std::string& model_id,
                                   const rolelab::Corpus& corpus, int dim, uint64_t seed = 7) {
  auto hash = [](const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  };
  std::string sanitized = model_id;
  for (char& c : sanitized)
    if (!(isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
  std::ofstream out(dir + "/" + sanitized + ".jsonl");
  for (const auto& sent : corpus.sentences) {
    out << "{\"sentence_id\": \"" << sent.id << "\", \"pieces\": [";
    rolelab::Vec ctx = seeded_vec(dim, seed ^ hash(sent.id));
    for (size_t t = 0; t < sent.tokens.size(); ++t) {
      rolelab::Vec tok = seeded_vec(dim, seed ^ hash(sent.tokens[t]));
      rolelab::Vec v = 0.7 * tok + 0.3 * ctx;
      if (t) out << ", ";
      out << "{\"token_index\": " << t << ", \"vector\": [";
      for (int i = 0; i < dim; ++i) out << (i ? ", " : "") << v[i];
      out << "]}";
    }
    rolelab::Vec sv = seeded_vec(dim, seed ^ hash(sent.id + "#sentence"));
    out << "], \"sentence_vector\": [";
    for (int i = 0; i < dim; ++i) out << (i ? ", " : "") << sv[i];
    out << "]}\n";
  }
}

}  // namespace testutil
