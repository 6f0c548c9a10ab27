#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rolelab/embeddings.hpp"
#include "rolelab/encoder.hpp"

namespace rolelab {

enum class TaskMode { srl_only, sprl_only, mtl };
enum class FeatureSource { none, gold, predicted };
enum class TransferMode { none, span_weights, span_and_head_weights };
enum class NaPolicy { negative, positive, exclude };

inline std::string to_string(TaskMode m) {
  switch (m) {
    case TaskMode::srl_only: return "srl_only";
    case TaskMode::sprl_only: return "sprl_only";
    default: return "mtl";
  }
}
inline std::string to_string(FeatureSource s) {
  switch (s) {
    case FeatureSource::none: return "none";
    case FeatureSource::gold: return "gold";
    default: return "predicted";
  }
}
inline std::string to_string(TransferMode t) {
  switch (t) {
    case TransferMode::none: return "none";
    case TransferMode::span_weights: return "span_weights";
    default: return "span_and_head_weights";
  }
}
inline std::string to_string(NaPolicy p) {
  switch (p) {
    case NaPolicy::negative: return "negative";
    case NaPolicy::positive: return "positive";
    default: return "exclude";
  }
}
inline std::string to_string(EmbeddingKind k) { return k == EmbeddingKind::static_table ? "static" : "contextual"; }

// One training/evaluation run, fully determined by these fields plus the
// input files. Serializes to a flat key=value document.
struct ExperimentConfig {
  // data
  std::string train_path, dev_path, test_path;
  // features
  EmbeddingKind embedding_kind = EmbeddingKind::static_table;
  std::string embedding_file;
  std::string contextual_model;
  bool use_span_embedding = false;
  bool use_sentence_embedding = false;
  int threshold = 2;
  NaPolicy na_policy = NaPolicy::negative;
  std::string stopword_file;  // empty: built-in list
  // encoder
  EncoderConfig encoder;  // input_dim resolved at model build time
  bool use_encoder = true;
  // tasks
  TaskMode task_mode = TaskMode::mtl;
  // span/head information concatenated to the SRL tagger input
  FeatureSource span_source = FeatureSource::none;
  FeatureSource head_source = FeatureSource::none;
  // head index used for the SPRL pair representation (gold or selected from
  // the head tagger's probabilities)
  FeatureSource sprl_head_source = FeatureSource::gold;
  bool joint_upstream = false;
  double loss_weight_span = 1.0, loss_weight_head = 1.0, loss_weight_srl = 1.0, loss_weight_sprl = 1.0;
  // transfer
  TransferMode transfer = TransferMode::none;
  std::string source_checkpoint;
  // optimization
  double learning_rate = 0.001;
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 5;
  double clip_norm = 5.0;  // 0 disables
  uint64_t seed = 1;

  bool needs_srl() const { return task_mode != TaskMode::sprl_only; }
  bool needs_sprl() const { return task_mode != TaskMode::srl_only; }
  bool needs_predicted_annotations() const {
    return span_source == FeatureSource::predicted || head_source == FeatureSource::predicted ||
           (needs_sprl() && sprl_head_source == FeatureSource::predicted);
  }
  // An upstream span/head pipeline is required for predicted features in the
  // staged setup and as the source of transferred weights.
  bool needs_upstream() const {
    return (needs_predicted_annotations() && !joint_upstream) || transfer != TransferMode::none;
  }

  void validate() const;
  std::map<std::string, std::string> to_map() const;
  static ExperimentConfig from_map(const std::map<std::string, std::string>& kv);
};

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: '" + key + "' expects a boolean, got '" + v + "'");
}

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

inline long parse_long(const std::string& key, const std::string& v) {
  try {
    size_t used = 0;
    long n = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects an integer, got '" + v + "'");
  }
}

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

}  // namespace detail

inline void ExperimentConfig::validate() const {
  if (threshold < 1 || threshold > 4) throw ConfigError("config: threshold must be in 1..4");
  if (learning_rate <= 0.0) throw ConfigError("config: learning_rate must be positive");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (max_epochs < 1) throw ConfigError("config: max_epochs must be >= 1");
  if (patience < 0) throw ConfigError("config: patience must be >= 0");
  if (clip_norm < 0.0) throw ConfigError("config: clip_norm must be >= 0");
  for (double w : {loss_weight_span, loss_weight_head, loss_weight_srl, loss_weight_sprl})
    if (w < 0.0) throw ConfigError("config: negative task loss weight");
  if (encoder.hidden_dim <= 0) throw ConfigError("config: hidden_dim must be positive");
  if (encoder.dropout_rate < 0.0 || encoder.dropout_rate >= 1.0)
    throw ConfigError("config: dropout_rate must be in [0,1)");
  if (encoder.num_layers < 1) throw ConfigError("config: num_layers must be >= 1");
  if (needs_sprl() && sprl_head_source == FeatureSource::none)
    throw ConfigError("config: SPRL requires sprl_head_source gold or predicted");
  if (use_span_embedding && embedding_kind != EmbeddingKind::static_table)
    throw ConfigError("config: span embeddings are defined for static embeddings only");
  if (!use_encoder) {
    if (task_mode != TaskMode::sprl_only || sprl_head_source != FeatureSource::gold ||
        span_source != FeatureSource::none || head_source != FeatureSource::none ||
        transfer != TransferMode::none || joint_upstream)
      throw ConfigError(
          "config: use_encoder=false supports only sprl_only with gold heads and no transfer/upstream");
  }
}

inline std::map<std::string, std::string> ExperimentConfig::to_map() const {
  std::map<std::string, std::string> kv;
  kv["train_path"] = train_path;
  kv["dev_path"] = dev_path;
  kv["test_path"] = test_path;
  kv["embedding_kind"] = to_string(embedding_kind);
  kv["embedding_file"] = embedding_file;
  kv["contextual_model"] = contextual_model;
  kv["use_span_embedding"] = use_span_embedding ? "true" : "false";
  kv["use_sentence_embedding"] = use_sentence_embedding ? "true" : "false";
  kv["threshold"] = std::to_string(threshold);
  kv["na_policy"] = to_string(na_policy);
  kv["stopword_file"] = stopword_file;
  kv["cell_kind"] = to_string(encoder.cell_kind);
  kv["hidden_dim"] = std::to_string(encoder.hidden_dim);
  {
    char buf[32];
    snprintf(buf, sizeof(buf), "%.17g", encoder.dropout_rate);
    kv["dropout_rate"] = buf;
    snprintf(buf, sizeof(buf), "%.17g", learning_rate);
    kv["learning_rate"] = buf;
    snprintf(buf, sizeof(buf), "%.17g", clip_norm);
    kv["clip_norm"] = buf;
    snprintf(buf, sizeof(buf), "%.17g", loss_weight_span);
    kv["loss_weight_span"] = buf;
    snprintf(buf, sizeof(buf), "%.17g", loss_weight_head);
    kv["loss_weight_head"] = buf;
    snprintf(buf, sizeof(buf), "%.17g", loss_weight_srl);
    kv["loss_weight_srl"] = buf;
    snprintf(buf, sizeof(buf), "%.17g", loss_weight_sprl);
    kv["loss_weight_sprl"] = buf;
  }
  kv["use_post_projection"] = encoder.use_post_projection ? "true" : "false";
  kv["num_layers"] = std::to_string(encoder.num_layers);
  kv["use_encoder"] = use_encoder ? "true" : "false";
  kv["task_mode"] = to_string(task_mode);
  kv["span_source"] = to_string(span_source);
  kv["head_source"] = to_string(head_source);
  kv["sprl_head_source"] = to_string(sprl_head_source);
  kv["joint_upstream"] = joint_upstream ? "true" : "false";
  kv["transfer"] = to_string(transfer);
  kv["source_checkpoint"] = source_checkpoint;
  kv["batch_size"] = std::to_string(batch_size);
  kv["max_epochs"] = std::to_string(max_epochs);
  kv["patience"] = std::to_string(patience);
  kv["seed"] = std::to_string(seed);
  return kv;
}

inline ExperimentConfig ExperimentConfig::from_map(const std::map<std::string, std::string>& kv) {
  ExperimentConfig cfg;
  auto get = [&](const char* key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    return it->second;
  };

  if (auto v = get("embedding_kind")) {
    if (*v == "static") cfg.embedding_kind = EmbeddingKind::static_table;
    else if (*v == "contextual") cfg.embedding_kind = EmbeddingKind::contextual;
    else throw ConfigError("config: unknown embedding_kind '" + *v + "'");
  }

  // cell kind defaults to the pairing used in the experiments: BiLSTM with
  // static embeddings, BiGRU with contextual ones.
  CellKind kind = cfg.embedding_kind == EmbeddingKind::static_table ? CellKind::lstm_like : CellKind::gru_like;
  if (auto v = get("cell_kind")) {
    auto parsed = cell_kind_from_string(*v);
    if (!parsed) throw ConfigError("config: unknown cell_kind '" + *v + "'");
    kind = *parsed;
  }
  cfg.encoder = EncoderConfig::defaults_for(kind);

  static const std::vector<std::string> known = {
      "train_path",       "dev_path",         "test_path",          "embedding_kind",
      "embedding_file",   "contextual_model", "use_span_embedding", "use_sentence_embedding",
      "threshold",        "na_policy",        "stopword_file",      "cell_kind",
      "hidden_dim",       "dropout_rate",     "use_post_projection", "num_layers",
      "use_encoder",      "task_mode",        "span_source",        "head_source",
      "sprl_head_source", "joint_upstream",   "loss_weight_span",   "loss_weight_srl",
      "loss_weight_head",
      "loss_weight_sprl", "transfer",         "source_checkpoint",  "learning_rate",
      "batch_size",       "max_epochs",       "patience",           "clip_norm",
      "seed"};
  for (const auto& [key, value] : kv) {
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("config: unknown key '" + key + "'");
  }

  if (auto v = get("train_path")) cfg.train_path = *v;
  if (auto v = get("dev_path")) cfg.dev_path = *v;
  if (auto v = get("test_path")) cfg.test_path = *v;
  if (auto v = get("embedding_file")) cfg.embedding_file = *v;
  if (auto v = get("contextual_model")) cfg.contextual_model = *v;
  if (auto v = get("use_span_embedding")) cfg.use_span_embedding = detail::parse_bool("use_span_embedding", *v);
  if (auto v = get("use_sentence_embedding"))
    cfg.use_sentence_embedding = detail::parse_bool("use_sentence_embedding", *v);
  if (auto v = get("threshold")) cfg.threshold = static_cast<int>(detail::parse_long("threshold", *v));
  if (auto v = get("na_policy")) {
    if (*v == "negative") cfg.na_policy = NaPolicy::negative;
    else if (*v == "positive") cfg.na_policy = NaPolicy::positive;
    else if (*v == "exclude") cfg.na_policy = NaPolicy::exclude;
    else throw ConfigError("config: unknown na_policy '" + *v + "'");
  }
  if (auto v = get("stopword_file")) cfg.stopword_file = *v;
  if (auto v = get("hidden_dim")) cfg.encoder.hidden_dim = static_cast<int>(detail::parse_long("hidden_dim", *v));
  if (auto v = get("dropout_rate")) cfg.encoder.dropout_rate = detail::parse_double("dropout_rate", *v);
  if (auto v = get("use_post_projection"))
    cfg.encoder.use_post_projection = detail::parse_bool("use_post_projection", *v);
  if (auto v = get("num_layers")) cfg.encoder.num_layers = static_cast<int>(detail::parse_long("num_layers", *v));
  if (auto v = get("use_encoder")) cfg.use_encoder = detail::parse_bool("use_encoder", *v);
  if (auto v = get("task_mode")) {
    if (*v == "srl_only") cfg.task_mode = TaskMode::srl_only;
    else if (*v == "sprl_only") cfg.task_mode = TaskMode::sprl_only;
    else if (*v == "mtl") cfg.task_mode = TaskMode::mtl;
    else throw ConfigError("config: unknown task_mode '" + *v + "'");
  }
  auto parse_source = [](const std::string& key, const std::string& v) {
    if (v == "none") return FeatureSource::none;
    if (v == "gold") return FeatureSource::gold;
    if (v == "predicted") return FeatureSource::predicted;
    throw ConfigError("config: unknown " + key + " '" + v + "'");
  };
  if (auto v = get("span_source")) cfg.span_source = parse_source("span_source", *v);
  if (auto v = get("head_source")) cfg.head_source = parse_source("head_source", *v);
  if (auto v = get("sprl_head_source")) cfg.sprl_head_source = parse_source("sprl_head_source", *v);
  if (auto v = get("joint_upstream")) cfg.joint_upstream = detail::parse_bool("joint_upstream", *v);
  if (auto v = get("loss_weight_span")) cfg.loss_weight_span = detail::parse_double("loss_weight_span", *v);
  if (auto v = get("loss_weight_head")) cfg.loss_weight_head = detail::parse_double("loss_weight_head", *v);
  if (auto v = get("loss_weight_srl")) cfg.loss_weight_srl = detail::parse_double("loss_weight_srl", *v);
  if (auto v = get("loss_weight_sprl")) cfg.loss_weight_sprl = detail::parse_double("loss_weight_sprl", *v);
  if (auto v = get("transfer")) {
    if (*v == "none") cfg.transfer = TransferMode::none;
    else if (*v == "span_weights") cfg.transfer = TransferMode::span_weights;
    else if (*v == "span_and_head_weights") cfg.transfer = TransferMode::span_and_head_weights;
    else throw ConfigError("config: unknown transfer mode '" + *v + "'");
  }
  if (auto v = get("source_checkpoint")) cfg.source_checkpoint = *v;
  if (auto v = get("learning_rate")) cfg.learning_rate = detail::parse_double("learning_rate", *v);
  if (auto v = get("batch_size")) cfg.batch_size = static_cast<int>(detail::parse_long("batch_size", *v));
  if (auto v = get("max_epochs")) cfg.max_epochs = static_cast<int>(detail::parse_long("max_epochs", *v));
  if (auto v = get("patience")) cfg.patience = static_cast<int>(detail::parse_long("patience", *v));
  if (auto v = get("clip_norm")) cfg.clip_norm = detail::parse_double("clip_norm", *v);
  if (auto v = get("seed")) cfg.seed = static_cast<uint64_t>(detail::parse_long("seed", *v));

  cfg.validate();
  return cfg;
}

// Flat `key = value` document; '#' starts a comment.
inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string trimmed = detail::trim(line);
    if (trimmed.empty()) continue;
    size_t eq = trimmed.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = detail::trim(trimmed.substr(0, eq));
    std::string value = detail::trim(trimmed.substr(eq + 1));
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

// `--set key=value` overrides.
inline void apply_overrides(std::map<std::string, std::string>& kv, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    size_t eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    kv[detail::trim(s.substr(0, eq))] = detail::trim(s.substr(eq + 1));
  }
}

inline std::string config_hash(const std::map<std::string, std::string>& kv) {
  std::ostringstream canon;
  for (const auto& [k, v] : kv) canon << k << "=" << v << "\n";
  return fnv1a_hex(canon.str());
}

// Embedding provider for a config: the static table file, or the contextual
// cache under the directory named by ROLELAB_ENCODER_CACHE.
inline std::unique_ptr<EmbeddingProvider> make_provider(const ExperimentConfig& cfg) {
  if (cfg.embedding_kind == EmbeddingKind::static_table) {
    if (cfg.embedding_file.empty()) throw ConfigError("config: embedding_kind=static requires embedding_file");
    return std::make_unique<StaticEmbeddings>(StaticEmbeddings::load(cfg.embedding_file));
  }
  if (cfg.contextual_model.empty())
    throw ConfigError("config: embedding_kind=contextual requires contextual_model");
  const char* cache_dir = std::getenv(ContextualCache::cache_env_var().c_str());
  return std::make_unique<ContextualCache>(cfg.contextual_model, cache_dir ? cache_dir : "");
}

inline StopwordSet stopwords_for(const ExperimentConfig& cfg) {
  if (cfg.stopword_file.empty()) return default_stopwords();
  return load_stopwords(cfg.stopword_file);
}

}  // namespace rolelab
