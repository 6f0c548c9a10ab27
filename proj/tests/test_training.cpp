#include <doctest.h>

#include "fd_check.hpp"
#include "helpers.hpp"
#include "rolelab/predict.hpp"
#include "rolelab/training.hpp"

using namespace rolelab;

namespace {

ExperimentConfig toy_config(TaskMode mode) {
  ExperimentConfig cfg;
  cfg.task_mode = mode;
  cfg.embedding_kind = EmbeddingKind::static_table;
  cfg.encoder = EncoderConfig::defaults_for(CellKind::lstm_like);
  cfg.encoder.hidden_dim = 8;
  cfg.encoder.dropout_rate = 0.0;
  cfg.span_source = FeatureSource::none;
  cfg.head_source = FeatureSource::gold;
  cfg.batch_size = 4;
  cfg.max_epochs = 5;
  cfg.patience = 3;
  cfg.seed = 7;
  return cfg;
}

}  // namespace

TEST_CASE("combined_loss: sums, weights, errors") {
  CHECK(combined_loss({{Task::srl, 2.0}}) == doctest::Approx(2.0));
  CHECK(combined_loss({{Task::srl, 1.0}, {Task::sprl, 3.0}}) == doctest::Approx(4.0));
  CHECK(combined_loss({{Task::srl, 1.0}, {Task::sprl, 3.0}}, {{Task::sprl, 0.5}}) == doctest::Approx(2.5));
  CHECK_THROWS_AS(combined_loss({}), ConfigError);
  CHECK_THROWS_AS(combined_loss({{Task::srl, 1.0}}, {{Task::srl, -1.0}}), ConfigError);
}

TEST_CASE("zero-weighted tasks receive zero gradient") {
  Corpus corpus = testutil::make_toy_corpus(4, 1);
  auto table = testutil::make_toy_embeddings(6, 2);
  ExperimentConfig cfg = toy_config(TaskMode::mtl);
  cfg.loss_weight_sprl = 0.0;
  JointModel model(cfg, table.dimension());
  model.init(3);
  StopwordSet stop;
  Dataset data = build_dataset(corpus, table, cfg, stop);

  ad::Tape tape;
  std::vector<InstanceForward> fwds;
  ForwardPlan plan;
  plan.run_srl = plan.run_sprl = plan.losses = true;
  for (auto& item : data) fwds.push_back(forward_instance(tape, model, item, plan, RunMode::train, nullptr));
  ad::NodeId loss = rolelab::detail::batch_loss_node(tape, fwds, {Task::srl, Task::sprl}, cfg);
  tape.backward(loss);

  for (int p = 0; p < kNumProperties; ++p) {
    CHECK(model.params.at("sprl." + to_string(static_cast<Property>(p)) + ".W").grad.isZero(0.0));
  }
  CHECK(!model.params.at("srl_tagger.W").grad.isZero(0.0));
}

TEST_CASE("toy MTL training: loss strictly decreases over the first epochs") {
  Corpus train_set = testutil::make_toy_corpus(10, 11);
  Corpus dev_set = testutil::make_toy_corpus(4, 12, "dev");
  auto table = testutil::make_toy_embeddings(6, 2);
  ExperimentConfig cfg = toy_config(TaskMode::mtl);
  cfg.max_epochs = 5;
  cfg.patience = 5;
  auto run = train(cfg, train_set, dev_set, table, {});
  REQUIRE(run.main.log.size() == 5);
  for (size_t e = 1; e < run.main.log.size(); ++e)
    CHECK(run.main.log[e].train_combined < run.main.log[e - 1].train_combined);
}

TEST_CASE("same config and seed reproduce identical logs and checkpoints") {
  Corpus train_set = testutil::make_toy_corpus(6, 21);
  Corpus dev_set = testutil::make_toy_corpus(3, 22, "dev");
  auto table = testutil::make_toy_embeddings(5, 4);
  ExperimentConfig cfg = toy_config(TaskMode::mtl);
  cfg.encoder.dropout_rate = 0.25;  // exercise the dropout stream too
  cfg.max_epochs = 3;

  auto r1 = train(cfg, train_set, dev_set, table, {});
  auto r2 = train(cfg, train_set, dev_set, table, {});
  CHECK(r1.main.log_csv() == r2.main.log_csv());
  REQUIRE(r1.main.checkpoint.tensors.size() == r2.main.checkpoint.tensors.size());
  for (const auto& [name, mat] : r1.main.checkpoint.tensors) CHECK(mat == r2.main.checkpoint.tensors.at(name));

  // a different seed diverges
  cfg.seed = 8;
  auto r3 = train(cfg, train_set, dev_set, table, {});
  CHECK(r3.main.log_csv() != r1.main.log_csv());
}

TEST_CASE("task isolation: untrained branches stay bitwise unchanged") {
  Corpus train_set = testutil::make_toy_corpus(6, 31);
  Corpus dev_set = testutil::make_toy_corpus(3, 32, "dev");
  auto table = testutil::make_toy_embeddings(5, 6);

  SUBCASE("srl_only leaves SPRL classifiers at initialization") {
    ExperimentConfig cfg = toy_config(TaskMode::srl_only);
    cfg.max_epochs = 3;
    JointModel reference(cfg, table.dimension());
    reference.init(cfg.seed);
    auto run = train(cfg, train_set, dev_set, table, {});
    for (int p = 0; p < kNumProperties; ++p) {
      std::string w = "sprl." + to_string(static_cast<Property>(p)) + ".W";
      std::string b = "sprl." + to_string(static_cast<Property>(p)) + ".b";
      CHECK(run.model->params.at(w).value == reference.params.at(w).value);
      CHECK(run.model->params.at(b).value == reference.params.at(b).value);
    }
    CHECK(run.model->params.at("srl_tagger.W").value != reference.params.at("srl_tagger.W").value);
  }
  SUBCASE("sprl_only leaves the SRL head at initialization") {
    ExperimentConfig cfg = toy_config(TaskMode::sprl_only);
    cfg.max_epochs = 3;
    JointModel reference(cfg, table.dimension());
    reference.init(cfg.seed);
    auto run = train(cfg, train_set, dev_set, table, {});
    CHECK(run.model->params.at("srl_tagger.W").value == reference.params.at("srl_tagger.W").value);
    CHECK(run.model->params.at("srl_tagger.b").value == reference.params.at("srl_tagger.b").value);
    CHECK(run.model->params.at("sprl.volition.W").value != reference.params.at("sprl.volition.W").value);
  }
}

TEST_CASE("transfer_init copies the selected tensors bitwise") {
  auto table = testutil::make_toy_embeddings(5, 8);
  ExperimentConfig cfg = toy_config(TaskMode::mtl);
  JointModel source(upstream_config(cfg), table.dimension());
  source.init(41);
  JointModel target(cfg, table.dimension());
  target.init(42);
  auto source_snapshot = Checkpoint::snapshot(source.params);

  SUBCASE("span_weights: encoder and span tagger only") {
    transfer_init(target.params, source_snapshot, TransferMode::span_weights);
    for (auto& t : target.params) {
      bool copied = t->name.rfind("encoder.", 0) == 0 || t->name.rfind("span_tagger.", 0) == 0;
      if (copied) CHECK(t->value == source.params.at(t->name).value);
    }
    CHECK(target.params.at("head_tagger.W").value != source.params.at("head_tagger.W").value);
  }
  SUBCASE("span_and_head_weights adds the head tagger") {
    transfer_init(target.params, source_snapshot, TransferMode::span_and_head_weights);
    CHECK(target.params.at("head_tagger.W").value == source.params.at("head_tagger.W").value);
    CHECK(target.params.at("head_tagger.b").value == source.params.at("head_tagger.b").value);
  }
  SUBCASE("shape incompatibility names the tensor") {
    ExperimentConfig small = cfg;
    small.encoder.hidden_dim = 4;
    JointModel incompatible(small, table.dimension());
    incompatible.init(1);
    CHECK_THROWS_WITH_AS(transfer_init(incompatible.params, source_snapshot, TransferMode::span_weights),
                         doctest::Contains("encoder."), TransferError);
  }
}

TEST_CASE("staged predicted features: upstream pipeline trains and annotates") {
  Corpus train_set = testutil::make_toy_corpus(8, 51);
  Corpus dev_set = testutil::make_toy_corpus(3, 52, "dev");
  auto table = testutil::make_toy_embeddings(5, 10);
  ExperimentConfig cfg = toy_config(TaskMode::srl_only);
  cfg.span_source = FeatureSource::predicted;
  cfg.head_source = FeatureSource::predicted;
  cfg.max_epochs = 2;

  auto run = train(cfg, train_set, dev_set, table, {});
  REQUIRE(run.upstream_model != nullptr);
  REQUIRE(run.upstream.has_value());
  CHECK(run.upstream->epochs_run >= 1);
  CHECK(!run.main.checkpoint.upstream_tensors.empty());

  // prediction works end to end from the trained pair of models
  auto output = predict_corpus(*run.model, run.upstream_model.get(), dev_set, table, {});
  REQUIRE(output.tags.size() == dev_set.instances.size());
  for (const auto& d : output.tags) {
    CHECK(d.pred_span.size() == d.tokens.size());
    CHECK(d.pred_srl.size() == d.tokens.size());
    for (const auto& h : d.selected_heads) {
      CHECK(h.head_index >= h.start);
      CHECK(h.head_index <= h.end);
    }
  }
}

TEST_CASE("a saved upstream checkpoint can seed transfer and annotations in a later run") {
  testutil::TempDir dir("srcckpt");
  Corpus train_set = testutil::make_toy_corpus(6, 64);
  Corpus dev_set = testutil::make_toy_corpus(3, 65, "dev");
  auto table = testutil::make_toy_embeddings(5, 66);

  ExperimentConfig first = toy_config(TaskMode::srl_only);
  first.span_source = FeatureSource::predicted;
  first.head_source = FeatureSource::predicted;
  first.max_epochs = 2;
  auto run1 = train(first, train_set, dev_set, table, {});
  REQUIRE(run1.upstream.has_value());
  run1.upstream->checkpoint.save(dir.file("upstream.json"));

  ExperimentConfig second = first;
  second.transfer = TransferMode::span_and_head_weights;
  second.source_checkpoint = dir.file("upstream.json");
  auto run2 = train(second, train_set, dev_set, table, {});
  CHECK(!run2.upstream.has_value());  // loaded, not re-trained
  REQUIRE(run2.upstream_model != nullptr);
  for (auto& t : run2.upstream_model->params)
    CHECK(t->value == run1.upstream_model->params.at(t->name).value);
}

TEST_CASE("joint upstream mode trains span/head/srl/sprl in one model") {
  Corpus train_set = testutil::make_toy_corpus(6, 61);
  Corpus dev_set = testutil::make_toy_corpus(3, 62, "dev");
  auto table = testutil::make_toy_embeddings(5, 12);
  ExperimentConfig cfg = toy_config(TaskMode::mtl);
  cfg.span_source = FeatureSource::predicted;
  cfg.head_source = FeatureSource::predicted;
  cfg.joint_upstream = true;
  cfg.max_epochs = 2;

  auto run = train(cfg, train_set, dev_set, table, {});
  CHECK(run.upstream_model == nullptr);
  // all four task losses appear in the log
  for (Task t : {Task::span, Task::head, Task::srl, Task::sprl})
    CHECK(run.main.log[0].train_losses.count(t) == 1);
}

TEST_CASE("without aux features the SRL output ignores the span/head tagger parameters") {
  Corpus corpus = testutil::make_toy_corpus(3, 55);
  auto table = testutil::make_toy_embeddings(5, 56);
  ExperimentConfig cfg = toy_config(TaskMode::srl_only);
  cfg.span_source = FeatureSource::none;
  cfg.head_source = FeatureSource::none;
  JointModel model(cfg, table.dimension());
  model.init(57);
  StopwordSet stop;
  Dataset data = build_dataset(corpus, table, cfg, stop);

  ForwardPlan plan;
  plan.run_srl = true;
  auto srl_dists = [&]() {
    std::vector<Vec> out;
    for (auto& item : data) {
      ad::Tape tape;
      auto fwd = forward_instance(tape, model, item, plan, RunMode::eval, nullptr);
      out.insert(out.end(), fwd.srl.distributions.begin(), fwd.srl.distributions.end());
    }
    return out;
  };
  auto before = srl_dists();
  model.params.at("span_tagger.W").value.setRandom();
  model.params.at("head_tagger.W").value.setRandom();
  model.params.at("span_tagger.b").value.setConstant(3.0);
  auto after = srl_dists();
  REQUIRE(before.size() == after.size());
  for (size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
}

TEST_CASE("upstream span/head pipeline memorizes a toy corpus") {
  Corpus train_set = testutil::make_toy_corpus(10, 58);
  auto table = testutil::make_toy_embeddings(8, 59);
  ExperimentConfig cfg = toy_config(TaskMode::mtl);
  cfg.encoder.hidden_dim = 16;
  cfg.learning_rate = 0.005;
  cfg.max_epochs = 150;
  cfg.patience = 150;
  ExperimentConfig up_cfg = upstream_config(cfg);
  JointModel upstream(up_cfg, table.dimension());
  upstream.init(60);
  StopwordSet stop;
  Dataset train_data = build_dataset(train_set, table, up_cfg, stop);
  Dataset dev_data = build_dataset(train_set, table, up_cfg, stop);
  train_loop(upstream, upstream_tasks(), train_data, dev_data, 60);

  annotate_predictions(train_data, upstream);
  std::vector<std::vector<int>> gold_span, pred_span, gold_head, pred_head;
  for (const auto& item : train_data) {
    gold_span.push_back({});
    pred_span.push_back({});
    gold_head.push_back({});
    pred_head.push_back({});
    for (int t = 0; t < item.length(); ++t) {
      gold_span.back().push_back(static_cast<int>(item.gold_span[static_cast<size_t>(t)]));
      pred_span.back().push_back(static_cast<int>(item.pred_span[static_cast<size_t>(t)]));
      gold_head.back().push_back(static_cast<int>(item.gold_head[static_cast<size_t>(t)]));
      pred_head.back().push_back(static_cast<int>(item.pred_head[static_cast<size_t>(t)]));
    }
  }
  double span_acc = micro_f1(tagging_confusion(gold_span, pred_span, span_table_layout().labels));
  double head_acc = micro_f1(tagging_confusion(gold_head, pred_head, head_table_layout().labels));
  CHECK(span_acc >= 0.99);
  CHECK(head_acc >= 0.99);
}

TEST_CASE("checkpoint save/load round trip and validation") {
  testutil::TempDir dir("ckpt");
  auto table = testutil::make_toy_embeddings(5, 61);
  ExperimentConfig cfg = toy_config(TaskMode::mtl);
  JointModel model(cfg, table.dimension());
  model.init(62);

  Checkpoint ckpt;
  ckpt.config = cfg.to_map();
  ckpt.seed = 62;
  ckpt.epoch = 7;
  ckpt.best_dev_loss = 0.125;
  ckpt.tensors = Checkpoint::snapshot(model.params);
  ckpt.save(dir.file("model.json"));

  Checkpoint loaded = Checkpoint::load(dir.file("model.json"));
  CHECK(loaded.seed == 62);
  CHECK(loaded.epoch == 7);
  CHECK(loaded.best_dev_loss == 0.125);
  CHECK(loaded.config == ckpt.config);

  JointModel restored(ExperimentConfig::from_map(loaded.config), table.dimension());
  Checkpoint::restore(loaded.tensors, restored.params);
  for (auto& t : model.params) CHECK(restored.params.at(t->name).value == t->value);

  // malformed / foreign / shape-mismatched checkpoints are rejected
  testutil::write_file(dir.file("junk.json"), "{\"kind\": \"other\"}");
  CHECK_THROWS_AS(Checkpoint::load(dir.file("junk.json")), DataError);
  testutil::write_file(dir.file("bad.json"), "not json");
  CHECK_THROWS_AS(Checkpoint::load(dir.file("bad.json")), ParseError);
  ExperimentConfig smaller = cfg;
  smaller.encoder.hidden_dim = 4;
  JointModel wrong(smaller, table.dimension());
  CHECK_THROWS_AS(Checkpoint::restore(loaded.tensors, wrong.params), DataError);
}

TEST_CASE("config files: parsing, defaults, overrides, validation") {
  testutil::TempDir dir("cfg");
  testutil::write_file(dir.file("a.cfg"),
                       "# comment\n"
                       "task_mode = mtl\n"
                       "embedding_kind = contextual   # trailing comment\n"
                       "contextual_model = some-encoder\n"
                       "\n"
                       "max_epochs = 7\n");
  auto kv = parse_config_file(dir.file("a.cfg"));
  CHECK(kv.at("max_epochs") == "7");
  apply_overrides(kv, {"max_epochs=9", "seed=4"});
  ExperimentConfig cfg = ExperimentConfig::from_map(kv);
  CHECK(cfg.max_epochs == 9);
  CHECK(cfg.seed == 4);
  // contextual defaults: GRU, hidden 8, no post projection, dropout 0.25
  CHECK(cfg.encoder.cell_kind == CellKind::gru_like);
  CHECK(cfg.encoder.hidden_dim == 8);
  CHECK(!cfg.encoder.use_post_projection);
  CHECK(cfg.encoder.dropout_rate == doctest::Approx(0.25));

  // static defaults to the BiLSTM setting
  ExperimentConfig st = ExperimentConfig::from_map({{"embedding_kind", "static"}});
  CHECK(st.encoder.cell_kind == CellKind::lstm_like);
  CHECK(st.encoder.hidden_dim == 128);
  CHECK(st.encoder.use_post_projection);

  CHECK_THROWS_AS(ExperimentConfig::from_map({{"bogus_key", "1"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_map({{"threshold", "5"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_map({{"loss_weight_srl", "-1"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_map({{"use_span_embedding", "true"}, {"embedding_kind", "contextual"}}),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_map({{"use_encoder", "false"}, {"task_mode", "mtl"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_map({{"dropout_rate", "1.0"}}), ConfigError);

  // config echo is stable: from_map(to_map(cfg)) round-trips
  ExperimentConfig again = ExperimentConfig::from_map(cfg.to_map());
  CHECK(again.to_map() == cfg.to_map());
}

TEST_CASE("missing gold heads with head_source=gold is a data error") {
  Corpus corpus;
  Sentence s;
  s.id = "x";
  s.tokens = {"the", "cat", "ate", "the", "rat"};
  corpus.add_sentence(s);
  PredicateInstance inst;
  inst.sentence_id = "x";
  inst.predicate_index = 2;
  ArgumentSpan span;
  span.start = 3;
  span.end = 4;
  span.role = Role::A1;
  span.protoroles[Property::volition] = Rating::of(4);  // rated but no head
  inst.argument_spans = {span};
  corpus.instances.push_back(inst);

  auto table = testutil::make_toy_embeddings(5, 14);
  ExperimentConfig cfg = toy_config(TaskMode::sprl_only);
  CHECK_THROWS_AS(build_dataset(corpus, table, cfg, {}), DataError);
}

TEST_CASE("divergence aborts with a diagnostic") {
  Corpus train_set = testutil::make_toy_corpus(4, 71);
  Corpus dev_set = testutil::make_toy_corpus(2, 72, "dev");
  auto table = testutil::make_toy_embeddings(5, 16);
  ExperimentConfig cfg = toy_config(TaskMode::srl_only);
  cfg.max_epochs = 2;
  JointModel model(cfg, table.dimension());
  model.init(cfg.seed);
  // poison one parameter; the first forward pass goes non-finite
  model.params.at("srl_tagger.W").value(0, 0) = std::numeric_limits<double>::quiet_NaN();
  StopwordSet stop;
  Dataset train_data = build_dataset(train_set, table, cfg, stop);
  Dataset dev_data = build_dataset(dev_set, table, cfg, stop);
  CHECK_THROWS_WITH_AS(train_loop(model, {Task::srl}, train_data, dev_data, cfg.seed),
                       doctest::Contains("diverged"), TrainingError);
}

TEST_CASE("gradient check with predicted features: soft span distribution feeds the head tagger") {
  Corpus corpus = testutil::make_toy_corpus(2, 83);
  auto table = testutil::make_toy_embeddings(3, 19);
  ExperimentConfig cfg = toy_config(TaskMode::mtl);
  cfg.encoder = EncoderConfig::defaults_for(CellKind::gru_like);
  cfg.encoder.hidden_dim = 2;
  cfg.encoder.dropout_rate = 0.0;
  cfg.span_source = FeatureSource::predicted;
  cfg.head_source = FeatureSource::predicted;
  cfg.sprl_head_source = FeatureSource::predicted;
  cfg.joint_upstream = true;

  JointModel model(cfg, table.dimension());
  // Hardened span/head features are piecewise-constant in the parameters, so
  // the check point must sit away from any argmax decision boundary; this
  // seed does (verified against neighbouring seeds).
  model.init(96);
  StopwordSet stop;
  Dataset data = build_dataset(corpus, table, cfg, stop);
  std::set<Task> tasks = {Task::span, Task::head, Task::srl, Task::sprl};

  auto build = [&](ad::Tape& tape) {
    ForwardPlan plan = rolelab::detail::plan_for(tasks, cfg, true);
    std::vector<InstanceForward> fwds;
    for (auto& item : data) fwds.push_back(forward_instance(tape, model, item, plan, RunMode::train, nullptr));
    return rolelab::detail::batch_loss_node(tape, fwds, tasks, cfg);
  };

  ad::Tape tape;
  ad::NodeId loss = build(tape);
  tape.backward(loss);
  // gradient flows from the head loss back through the span distribution
  CHECK(!model.params.at("span_tagger.W").grad.isZero(0.0));
  auto report = testutil::finite_difference_check(model.params, [&]() {
    ad::Tape t;
    return t.scalar(build(t));
  });
  CAPTURE(report.worst_tensor);
  CHECK(report.max_rel_err < 1e-4);
}

TEST_CASE("full MTL gradient check on a micro-model (both cell kinds)") {
  // d=3, H=2, L=3..7; joint upstream so every parameter receives gradient;
  // all 18 classifiers active with span + sentence embeddings.
  Corpus corpus = testutil::make_toy_corpus(2, 81);
  auto table = testutil::make_toy_embeddings(3, 18);
  for (CellKind kind : {CellKind::lstm_like, CellKind::gru_like}) {
    CAPTURE(to_string(kind));
    ExperimentConfig cfg = toy_config(TaskMode::mtl);
    cfg.encoder = EncoderConfig::defaults_for(kind);
    cfg.encoder.hidden_dim = 2;
    cfg.encoder.dropout_rate = 0.0;
    cfg.span_source = FeatureSource::gold;
    cfg.head_source = FeatureSource::gold;
    cfg.use_span_embedding = true;
    cfg.use_sentence_embedding = true;
    cfg.joint_upstream = true;

    JointModel model(cfg, table.dimension());
    model.init(91);
    StopwordSet stop;
    Dataset data = build_dataset(corpus, table, cfg, stop);
    std::set<Task> tasks = {Task::span, Task::head, Task::srl, Task::sprl};

    auto build = [&](ad::Tape& tape) {
      ForwardPlan plan = rolelab::detail::plan_for(tasks, cfg, true);
      std::vector<InstanceForward> fwds;
      for (auto& item : data) fwds.push_back(forward_instance(tape, model, item, plan, RunMode::train, nullptr));
      return rolelab::detail::batch_loss_node(tape, fwds, tasks, cfg);
    };

    ad::Tape tape;
    ad::NodeId loss = build(tape);
    tape.backward(loss);
    auto report = testutil::finite_difference_check(model.params, [&]() {
      ad::Tape t;
      return t.scalar(build(t));
    });
    CAPTURE(report.worst_tensor);
    CAPTURE(report.worst_analytic);
    CAPTURE(report.worst_numeric);
    CHECK(report.checked == model.params.total_parameters());
    CHECK(report.max_rel_err < 1e-4);
  }
}
