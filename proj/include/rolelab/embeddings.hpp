#pragma once

#include <cctype>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rolelab/corpus.hpp"
#include "rolelab/stopwords.hpp"

namespace rolelab {

inline std::string lowercase(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

enum class EmbeddingKind { static_table, contextual };

// Per-token vector source. Static lookups are context-free; the contextual
// adapter returns sentence-dependent vectors plus one sentence summary.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual EmbeddingKind kind() const = 0;
  virtual int dimension() const = 0;
  virtual std::vector<Vec> token_vectors(const Sentence& sentence) const = 0;
  virtual Vec sentence_vector(const Sentence& sentence) const = 0;
};

// Pretrained embedding table in the usual text format: one entry per line,
// `token v1 v2 ... vd`. Lookup is lowercased; OOV tokens get the zero vector,
// which is inert under mean pooling.
class StaticEmbeddings : public EmbeddingProvider {
 public:
  StaticEmbeddings(std::map<std::string, Vec> table, int dimension)
      : table_(std::move(table)), dim_(dimension) {
    for (const auto& [tok, vec] : table_) {
      if (vec.size() != dim_) throw DataError("embedding for '" + tok + "' has wrong dimension");
      if (!vec.allFinite()) throw DataError("embedding for '" + tok + "' has non-finite values");
    }
  }

  static StaticEmbeddings load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("StaticEmbeddings: cannot open '" + path + "'");
    std::map<std::string, Vec> table;
    std::string line;
    int line_no = 0;
    int dim = -1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::istringstream ss(line);
      std::string token;
      ss >> token;
      std::vector<double> values;
      double v;
      while (ss >> v) values.push_back(v);
      if (token.empty() || values.empty())
        throw ParseError(path + ":" + std::to_string(line_no) + ": malformed embedding entry");
      if (dim < 0) dim = static_cast<int>(values.size());
      if (static_cast<int>(values.size()) != dim)
        throw ParseError(path + ":" + std::to_string(line_no) + ": inconsistent embedding dimension");
      Vec vec(dim);
      for (int i = 0; i < dim; ++i) vec[i] = values[static_cast<size_t>(i)];
      table[lowercase(token)] = std::move(vec);
    }
    if (dim < 0) throw DataError("StaticEmbeddings: '" + path + "' contains no entries");
    return StaticEmbeddings(std::move(table), dim);
  }

  EmbeddingKind kind() const override { return EmbeddingKind::static_table; }
  int dimension() const override { return dim_; }

  Vec lookup(const std::string& token) const {
    auto it = table_.find(lowercase(token));
    if (it == table_.end()) return Vec::Zero(dim_);
    return it->second;
  }

  std::vector<Vec> token_vectors(const Sentence& sentence) const override {
    std::vector<Vec> out;
    out.reserve(sentence.tokens.size());
    for (const auto& t : sentence.tokens) out.push_back(lookup(t));
    return out;
  }

  Vec sentence_vector(const Sentence& sentence) const override {
    Vec sum = Vec::Zero(dim_);
    for (const auto& t : sentence.tokens) sum += lookup(t);
    return sum / static_cast<double>(sentence.tokens.size());
  }

 private:
  std::map<std::string, Vec> table_;
  int dim_;
};

// Adapter over a pretrained contextual encoder. The heavy backend runs out of
// process and dumps piece vectors to a cache file; this adapter mean-pools the
// pieces back to corpus-token granularity. Cache records are JSON lines:
//   {"sentence_id": str, "pieces": [{"token_index": int, "vector": [..]}],
//    "sentence_vector": [..]}
// All reads are pure after construction, so concurrent lookup is safe.
class ContextualCache : public EmbeddingProvider {
 public:
  ContextualCache(const std::string& model_id, const std::string& cache_dir) : model_id_(model_id) {
    if (cache_dir.empty())
      throw ConfigError("contextual encoder unavailable: cache directory not set (" + cache_env_var() + ")");
    std::string path = cache_dir + "/" + sanitized_model_id() + ".jsonl";
    std::ifstream in(path);
    if (!in) throw ConfigError("contextual encoder unavailable: no cache file '" + path + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json rec;
      try {
        rec = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": malformed cache record: " + e.what());
      }
      Entry entry;
      for (const auto& p : rec.at("pieces")) {
        Piece piece;
        piece.token_index = p.at("token_index").get<int>();
        piece.vector = parse_vec(p.at("vector"));
        entry.pieces.push_back(std::move(piece));
      }
      entry.sentence_vector = parse_vec(rec.at("sentence_vector"));
      if (dim_ < 0) dim_ = static_cast<int>(entry.sentence_vector.size());
      if (entry.sentence_vector.size() != dim_)
        throw DataError(path + ":" + std::to_string(line_no) + ": inconsistent vector dimension");
      for (const auto& p : entry.pieces) {
        if (p.vector.size() != dim_)
          throw DataError(path + ":" + std::to_string(line_no) + ": inconsistent vector dimension");
      }
      entries_[rec.at("sentence_id").get<std::string>()] = std::move(entry);
    }
    if (dim_ < 0) throw ConfigError("contextual encoder unavailable: cache file '" + path + "' is empty");
  }

  static std::string cache_env_var() { return "ROLELAB_ENCODER_CACHE"; }

  EmbeddingKind kind() const override { return EmbeddingKind::contextual; }
  int dimension() const override { return dim_; }

  std::vector<Vec> token_vectors(const Sentence& sentence) const override {
    const Entry& entry = find(sentence);
    int length = sentence.length();
    std::vector<Vec> sums(static_cast<size_t>(length), Vec::Zero(dim_));
    std::vector<int> counts(static_cast<size_t>(length), 0);
    for (const auto& p : entry.pieces) {
      if (p.token_index < 0 || p.token_index >= length)
        throw AlignmentError("token alignment failed for sentence '" + sentence.id + "': piece index " +
                             std::to_string(p.token_index) + " out of range");
      sums[static_cast<size_t>(p.token_index)] += p.vector;
      counts[static_cast<size_t>(p.token_index)] += 1;
    }
    for (int t = 0; t < length; ++t) {
      if (counts[static_cast<size_t>(t)] == 0)
        throw AlignmentError("token alignment failed for sentence '" + sentence.id + "': token " +
                             std::to_string(t) + " has no pieces");
      sums[static_cast<size_t>(t)] /= static_cast<double>(counts[static_cast<size_t>(t)]);
    }
    return sums;
  }

  Vec sentence_vector(const Sentence& sentence) const override { return find(sentence).sentence_vector; }

  const std::string& model_id() const { return model_id_; }

 private:
  struct Piece {
    int token_index;
    Vec vector;
  };
  struct Entry {
    std::vector<Piece> pieces;
    Vec sentence_vector;
  };

  static Vec parse_vec(const nlohmann::json& arr) {
    Vec v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
  }

  std::string sanitized_model_id() const {
    std::string out = model_id_;
    for (char& c : out) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) c = '_';
    }
    return out;
  }

  const Entry& find(const Sentence& sentence) const {
    auto it = entries_.find(sentence.id);
    if (it == entries_.end())
      throw ConfigError("contextual encoder unavailable: sentence '" + sentence.id + "' not in cache for model '" +
                        model_id_ + "'");
    return it->second;
  }

  std::string model_id_;
  std::map<std::string, Entry> entries_;
  Eigen::Index dim_ = -1;
};

// Position of a token relative to the predicate, as a raw signed scalar.
inline int relative_position(int token_index, int predicate_index) { return token_index - predicate_index; }

// Mean of in-span static embeddings, skipping stopwords; if every in-span
// token is a stopword, falls back to the mean over all in-span tokens.
inline Vec span_embedding(const Sentence& sentence, const ArgumentSpan& span, const StopwordSet& stopwords,
                          const StaticEmbeddings& provider) {
  if (span.start < 0 || span.end >= sentence.length() || span.start > span.end)
    throw ValidationError("span_embedding: span out of range in sentence '" + sentence.id + "'");
  Vec sum = Vec::Zero(provider.dimension());
  int kept = 0;
  for (int t = span.start; t <= span.end; ++t) {
    if (stopwords.count(lowercase(sentence.tokens[static_cast<size_t>(t)]))) continue;
    sum += provider.lookup(sentence.tokens[static_cast<size_t>(t)]);
    ++kept;
  }
  if (kept > 0) return sum / static_cast<double>(kept);
  for (int t = span.start; t <= span.end; ++t) sum += provider.lookup(sentence.tokens[static_cast<size_t>(t)]);
  return sum / static_cast<double>(span.length());
}

inline Vec sentence_embedding(const Sentence& sentence, const EmbeddingProvider& provider) {
  return provider.sentence_vector(sentence);
}

// Per-token feature vectors: embedding (d) ++ predicate indicator (1) ++
// relative position (1); total d+2.
inline std::vector<Vec> build_token_features(const Sentence& sentence, int predicate_index,
                                             const EmbeddingProvider& provider) {
  if (predicate_index < 0 || predicate_index >= sentence.length())
    throw ValidationError("build_token_features: predicate_index out of range in '" + sentence.id + "'");
  std::vector<Vec> embeddings = provider.token_vectors(sentence);
  int d = provider.dimension();
  std::vector<Vec> out;
  out.reserve(embeddings.size());
  for (int t = 0; t < sentence.length(); ++t) {
    Vec f(d + 2);
    f.head(d) = embeddings[static_cast<size_t>(t)];
    f[d] = (t == predicate_index) ? 1.0 : 0.0;
    f[d + 1] = static_cast<double>(relative_position(t, predicate_index));
    if (!f.allFinite()) throw DataError("non-finite feature vector in sentence '" + sentence.id + "'");
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace rolelab
