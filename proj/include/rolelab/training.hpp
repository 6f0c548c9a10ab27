#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rolelab/checkpoint.hpp"
#include "rolelab/model.hpp"

namespace rolelab {

// Weighted sum of per-task losses; weights default to 1.
inline double combined_loss(const std::map<Task, double>& task_losses, const std::map<Task, double>& weights = {}) {
  if (task_losses.empty()) throw ConfigError("combined_loss: no task losses");
  double total = 0.0;
  for (const auto& [task, loss] : task_losses) {
    double w = 1.0;
    auto it = weights.find(task);
    if (it != weights.end()) w = it->second;
    if (w < 0.0) throw ConfigError("combined_loss: negative weight for task " + to_string(task));
    total += w * loss;
  }
  return total;
}

inline std::set<Task> main_tasks(const ExperimentConfig& cfg) {
  std::set<Task> tasks;
  if (cfg.needs_srl()) tasks.insert(Task::srl);
  if (cfg.needs_sprl()) tasks.insert(Task::sprl);
  if (cfg.joint_upstream) {
    tasks.insert(Task::span);
    tasks.insert(Task::head);
  }
  return tasks;
}

inline std::set<Task> upstream_tasks() { return {Task::span, Task::head}; }

inline double task_weight(const ExperimentConfig& cfg, Task t) {
  switch (t) {
    case Task::span: return cfg.loss_weight_span;
    case Task::head: return cfg.loss_weight_head;
    case Task::srl: return cfg.loss_weight_srl;
    default: return cfg.loss_weight_sprl;
  }
}

// The standalone span/head pipeline trained ahead of the main model. Its head
// tagger sees gold span one-hots only when the experiment feeds gold spans;
// otherwise it consumes its own predicted distribution.
inline ExperimentConfig upstream_config(const ExperimentConfig& cfg) {
  ExperimentConfig up = cfg;
  up.task_mode = TaskMode::mtl;
  up.transfer = TransferMode::none;
  up.source_checkpoint.clear();
  up.joint_upstream = false;
  up.use_span_embedding = false;
  up.use_sentence_embedding = false;
  up.span_source = cfg.span_source == FeatureSource::gold ? FeatureSource::gold : FeatureSource::predicted;
  up.head_source = FeatureSource::predicted;
  up.sprl_head_source = FeatureSource::predicted;
  return up;
}

struct EpochLog {
  int epoch = 0;
  std::map<Task, double> train_losses, dev_losses;
  double train_combined = 0.0, dev_combined = 0.0;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<EpochLog> log;
  int best_epoch = 0;         // 1-based epoch with the lowest dev loss
  double best_dev_loss = 0.0;
  int epochs_run = 0;

  // CSV with columns epoch,task,split,loss (full precision for byte-stable logs).
  std::string log_csv() const {
    std::ostringstream out;
    out << "epoch,task,split,loss\n";
    char buf[40];
    auto row = [&](int epoch, const std::string& task, const char* split, double loss) {
      snprintf(buf, sizeof(buf), "%.17g", loss);
      out << epoch << "," << task << "," << split << "," << buf << "\n";
    };
    for (const auto& e : log) {
      for (const auto& [task, loss] : e.train_losses) row(e.epoch, to_string(task), "train", loss);
      row(e.epoch, "combined", "train", e.train_combined);
      for (const auto& [task, loss] : e.dev_losses) row(e.epoch, to_string(task), "dev", loss);
      row(e.epoch, "combined", "dev", e.dev_combined);
    }
    return out.str();
  }
};

namespace detail {

// Accumulates term-level sums so epoch losses are exact means per token
// (span/head/srl) and sums of per-property means (sprl).
struct LossAccumulator {
  std::map<Task, double> sums;
  std::map<Task, long> counts;
  std::array<double, kNumProperties> sprl_sums{};
  std::array<long, kNumProperties> sprl_counts{};

  void add(ad::Tape& tape, const InstanceForward& fwd) {
    auto add_terms = [&](Task task, const std::vector<ad::NodeId>& terms) {
      for (ad::NodeId id : terms) {
        sums[task] += tape.scalar(id);
        counts[task] += 1;
      }
    };
    add_terms(Task::span, fwd.span_terms);
    add_terms(Task::head, fwd.head_terms);
    add_terms(Task::srl, fwd.srl_terms);
    for (int p = 0; p < kNumProperties; ++p) {
      for (ad::NodeId id : fwd.sprl_terms[static_cast<size_t>(p)]) {
        sprl_sums[static_cast<size_t>(p)] += tape.scalar(id);
        sprl_counts[static_cast<size_t>(p)] += 1;
      }
    }
  }

  std::map<Task, double> task_means(const std::set<Task>& tasks) const {
    std::map<Task, double> out;
    for (Task t : tasks) {
      if (t == Task::sprl) {
        double total = 0.0;
        for (int p = 0; p < kNumProperties; ++p)
          if (sprl_counts[static_cast<size_t>(p)] > 0)
            total += sprl_sums[static_cast<size_t>(p)] / static_cast<double>(sprl_counts[static_cast<size_t>(p)]);
        out[t] = total;
      } else {
        auto cit = counts.find(t);
        out[t] = (cit == counts.end() || cit->second == 0) ? 0.0 : sums.at(t) / static_cast<double>(cit->second);
      }
    }
    return out;
  }
};

// Batch-level loss graph: mean per token for the taggers, sum of per-property
// means for SPRL, weighted sum across tasks. Empty when no instance in the
// batch contributes a term (the trainer skips such batches).
inline std::optional<ad::NodeId> batch_loss_node_opt(ad::Tape& tape, const std::vector<InstanceForward>& forwards,
                                                     const std::set<Task>& tasks, const ExperimentConfig& cfg) {
  std::vector<std::pair<ad::NodeId, double>> weighted;
  for (Task task : tasks) {
    if (task == Task::sprl) {
      std::vector<std::pair<ad::NodeId, double>> prop_means;
      for (int p = 0; p < kNumProperties; ++p) {
        std::vector<ad::NodeId> terms;
        for (const auto& fwd : forwards)
          terms.insert(terms.end(), fwd.sprl_terms[static_cast<size_t>(p)].begin(),
                       fwd.sprl_terms[static_cast<size_t>(p)].end());
        if (terms.empty()) continue;
        prop_means.emplace_back(tape.mean_of(terms), 1.0);
      }
      if (prop_means.empty()) continue;
      weighted.emplace_back(tape.weighted_sum(prop_means), task_weight(cfg, task));
    } else {
      std::vector<ad::NodeId> terms;
      for (const auto& fwd : forwards) {
        const auto& src = task == Task::span ? fwd.span_terms : task == Task::head ? fwd.head_terms : fwd.srl_terms;
        terms.insert(terms.end(), src.begin(), src.end());
      }
      if (terms.empty()) continue;
      weighted.emplace_back(tape.mean_of(terms), task_weight(cfg, task));
    }
  }
  if (weighted.empty()) return std::nullopt;
  return tape.weighted_sum(weighted);
}

inline ad::NodeId batch_loss_node(ad::Tape& tape, const std::vector<InstanceForward>& forwards,
                                  const std::set<Task>& tasks, const ExperimentConfig& cfg) {
  auto loss = batch_loss_node_opt(tape, forwards, tasks, cfg);
  if (!loss) throw TrainingError("batch produced no loss terms");
  return *loss;
}

inline ForwardPlan plan_for(const std::set<Task>& tasks, const ExperimentConfig& cfg, bool losses) {
  ForwardPlan plan;
  plan.run_tags = cfg.use_encoder && (tasks.count(Task::span) || tasks.count(Task::head));
  plan.run_srl = tasks.count(Task::srl) > 0;
  plan.run_sprl = tasks.count(Task::sprl) > 0;
  plan.losses = losses;
  plan.soft_span_to_head = tasks.count(Task::head) > 0 && cfg.span_source != FeatureSource::gold;
  return plan;
}

}  // namespace detail

// Runs the trained span/head pipeline over a dataset in inference mode and
// attaches predicted tags, H-probabilities and per-span selected heads.
inline void annotate_predictions(Dataset& data, JointModel& upstream) {
  ForwardPlan plan;
  plan.run_tags = true;
  for (auto& item : data) {
    ad::Tape tape;
    InstanceForward fwd = forward_instance(tape, upstream, item, plan, RunMode::eval, nullptr);
    item.pred_span = fwd.span.tags;
    item.pred_head = fwd.head.tags;
    item.pred_head_probs.resize(static_cast<size_t>(item.length()));
    for (int t = 0; t < item.length(); ++t)
      item.pred_head_probs[static_cast<size_t>(t)] =
          fwd.head.distributions[static_cast<size_t>(t)][static_cast<int>(HeadTag::H)];
    item.selected_heads = select_argument_heads(item.pred_head_probs, item.instance->argument_spans);
    item.has_predictions = true;
  }
}

struct TrainOptions {
  // Invoked after each epoch with the log entry; return false to stop early
  // (used nowhere in production, handy in tests).
  std::function<bool(const EpochLog&)> on_epoch;
};

// Single training loop over a fixed task set with early stopping on the dev
// combined loss. Deterministic given the model seed.
inline TrainResult train_loop(JointModel& model, const std::set<Task>& tasks, Dataset& train_data,
                              Dataset& dev_data, uint64_t seed, const TrainOptions& options = {}) {
  const ExperimentConfig& cfg = model.cfg;
  Rng shuffle_rng = Rng(seed).fork(0x51a0);
  Rng dropout_rng = Rng(seed).fork(0xd409);
  ad::Adam adam(ad::AdamConfig{.learning_rate = cfg.learning_rate});

  TrainResult result;
  std::map<std::string, Mat> best_snapshot = Checkpoint::snapshot(model.params);
  double best_dev = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int epochs_since_best = 0;

  std::vector<size_t> order(train_data.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  auto evaluate_split = [&](Dataset& data) {
    detail::LossAccumulator acc;
    ForwardPlan plan = detail::plan_for(tasks, cfg, /*losses=*/true);
    for (auto& item : data) {
      ad::Tape tape;
      InstanceForward fwd = forward_instance(tape, model, item, plan, RunMode::eval, nullptr);
      acc.add(tape, fwd);
    }
    return acc;
  };

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    detail::LossAccumulator train_acc;
    ForwardPlan plan = detail::plan_for(tasks, cfg, /*losses=*/true);
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      size_t stop = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      ad::Tape tape;
      std::vector<InstanceForward> forwards;
      forwards.reserve(stop - start);
      for (size_t k = start; k < stop; ++k)
        forwards.push_back(forward_instance(tape, model, train_data[order[k]], plan, RunMode::train, &dropout_rng));
      auto loss = detail::batch_loss_node_opt(tape, forwards, tasks, cfg);
      if (!loss) continue;  // no annotated material in this batch
      double loss_value = tape.scalar(*loss);
      if (!std::isfinite(loss_value))
        throw TrainingError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
      tape.backward(*loss);
      adam.step(model.params, cfg.clip_norm);
      for (const auto& fwd : forwards) train_acc.add(tape, fwd);
    }

    detail::LossAccumulator dev_acc = evaluate_split(dev_data);

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_losses = train_acc.task_means(tasks);
    entry.dev_losses = dev_acc.task_means(tasks);
    std::map<Task, double> weights;
    for (Task t : tasks) weights[t] = task_weight(cfg, t);
    entry.train_combined = combined_loss(entry.train_losses, weights);
    entry.dev_combined = combined_loss(entry.dev_losses, weights);
    result.log.push_back(entry);
    result.epochs_run = epoch;

    if (!std::isfinite(entry.dev_combined))
      throw TrainingError("training diverged: non-finite dev loss at epoch " + std::to_string(epoch));

    if (entry.dev_combined < best_dev) {
      best_dev = entry.dev_combined;
      best_epoch = epoch;
      best_snapshot = Checkpoint::snapshot(model.params);
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
    }
    if (options.on_epoch && !options.on_epoch(entry)) break;
    if (epochs_since_best > cfg.patience) break;
  }

  Checkpoint::restore(best_snapshot, model.params);
  result.best_epoch = best_epoch;
  result.best_dev_loss = best_dev;
  result.checkpoint.config = cfg.to_map();
  result.checkpoint.seed = seed;
  result.checkpoint.epoch = best_epoch;
  result.checkpoint.best_dev_loss = best_dev;
  result.checkpoint.tensors = std::move(best_snapshot);
  return result;
}

// Everything train() hands back: the main result plus, when an upstream
// pipeline was trained (or loaded), its result/model for inspection.
struct TrainRun {
  TrainResult main;
  std::unique_ptr<JointModel> model;
  std::unique_ptr<JointModel> upstream_model;  // null unless the run needed one
  std::optional<TrainResult> upstream;         // set when the upstream was trained here
};

// Full training procedure for one experiment config:
//   1. train (or load) the upstream span/head pipeline when the run consumes
//      predicted features or transfers weights,
//   2. annotate the datasets with its predictions if needed,
//   3. initialize the main model (warm-started when transfer is on) and train
//      the configured tasks.
inline TrainRun train(const ExperimentConfig& cfg, const Corpus& train_corpus, const Corpus& dev_corpus,
                      const EmbeddingProvider& provider, const StopwordSet& stopwords) {
  cfg.validate();
  TrainRun run;
  Dataset train_data = build_dataset(train_corpus, provider, cfg, stopwords);
  Dataset dev_data = build_dataset(dev_corpus, provider, cfg, stopwords);

  if (cfg.needs_upstream()) {
    if (!cfg.source_checkpoint.empty()) {
      Checkpoint source = Checkpoint::load(cfg.source_checkpoint);
      ExperimentConfig src_cfg = ExperimentConfig::from_map(source.config);
      run.upstream_model = std::make_unique<JointModel>(src_cfg, provider.dimension());
      Checkpoint::restore(source.tensors, run.upstream_model->params);
    } else {
      ExperimentConfig up_cfg = upstream_config(cfg);
      run.upstream_model = std::make_unique<JointModel>(up_cfg, provider.dimension());
      run.upstream_model->init(cfg.seed);
      Dataset up_train = build_dataset(train_corpus, provider, up_cfg, stopwords);
      Dataset up_dev = build_dataset(dev_corpus, provider, up_cfg, stopwords);
      run.upstream = train_loop(*run.upstream_model, upstream_tasks(), up_train, up_dev, cfg.seed);
    }
    if (cfg.needs_predicted_annotations() && !cfg.joint_upstream) {
      annotate_predictions(train_data, *run.upstream_model);
      annotate_predictions(dev_data, *run.upstream_model);
    }
  }

  run.model = std::make_unique<JointModel>(cfg, provider.dimension());
  run.model->init(cfg.seed);
  if (cfg.transfer != TransferMode::none)
    transfer_init(run.model->params, Checkpoint::snapshot(run.upstream_model->params), cfg.transfer);

  run.main = train_loop(*run.model, main_tasks(cfg), train_data, dev_data, cfg.seed);
  if (run.upstream_model) run.main.checkpoint.upstream_tensors = Checkpoint::snapshot(run.upstream_model->params);
  return run;
}

}  // namespace rolelab
