// rolelab: joint semantic role and proto-role labeling pipeline.
//
// Subcommands: convert, train, predict, evaluate, diagnose-heads, matrix.
// Exit codes: 0 success, 1 internal error (with error.log), 2 user/config error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "rolelab/convert.hpp"
#include "rolelab/matrix.hpp"
#include "rolelab/predict.hpp"

namespace fs = std::filesystem;
using namespace rolelab;

namespace {

void write_manifest(const std::string& dir, const std::string& command,
                    const std::map<std::string, std::string>& config, uint64_t seed,
                    const std::map<std::string, std::string>& extra = {}) {
  nlohmann::ordered_json manifest;
  manifest["command"] = command;
  manifest["version"] = kVersion;
  manifest["seed"] = seed;
  if (!config.empty()) {
    manifest["config"] = config;
    manifest["config_hash"] = config_hash(config);
  }
  for (const auto& [k, v] : extra) manifest[k] = v;
  std::ofstream out(fs::path(dir) / "manifest.json");
  out << manifest.dump(2) << "\n";
}

int run_guarded(const std::string& output_dir, const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    std::string dir = output_dir.empty() ? "." : output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    std::ofstream log(fs::path(dir) / "error.log", std::ios::app);
    log << "internal error: " << e.what() << "\n";
    std::cerr << "details written to " << (fs::path(dir) / "error.log").string() << "\n";
    return 1;
  }
}

ExperimentConfig config_from_cli(const std::string& config_path, const std::vector<std::string>& sets,
                                 std::optional<uint64_t> seed, std::map<std::string, std::string>* kv_out) {
  std::map<std::string, std::string> kv;
  if (!config_path.empty()) kv = parse_config_file(config_path);
  apply_overrides(kv, sets);
  if (seed) kv["seed"] = std::to_string(*seed);
  ExperimentConfig cfg = ExperimentConfig::from_map(kv);
  if (kv_out) *kv_out = cfg.to_map();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rolelab: joint semantic role labeling and proto-role property prediction"};
  app.require_subcommand(1);

  // convert
  auto* convert = app.add_subcommand("convert", "convert source TSV data to canonical JSON-lines corpora");
  std::string convert_input, convert_output;
  int convert_threshold = 2;
  convert->add_option("--input", convert_input, "source directory")->required();
  convert->add_option("--output", convert_output, "output directory for train/dev/test.jsonl")->required();
  convert->add_option("--threshold", convert_threshold, "rating binarization threshold (default 2)");

  // train
  auto* train_cmd = app.add_subcommand("train", "train one experiment configuration");
  std::string train_config, train_output = "rolelab-run";
  std::vector<std::string> train_sets;
  std::optional<uint64_t> train_seed;
  train_cmd->add_option("--config", train_config, "experiment config file")->required();
  train_cmd->add_option("--set", train_sets, "override config entries, key=value");
  train_cmd->add_option("--seed", train_seed, "override the seed");
  train_cmd->add_option("--output-dir", train_output, "output directory (default rolelab-run)");

  // predict
  auto* predict_cmd = app.add_subcommand("predict", "run a checkpoint over a corpus and dump predictions");
  std::string predict_ckpt, predict_corpus_path, predict_split = "test", predict_output = "rolelab-predict";
  predict_cmd->add_option("--checkpoint", predict_ckpt, "checkpoint file")->required();
  predict_cmd->add_option("--corpus", predict_corpus_path, "corpus JSON-lines file")->required();
  predict_cmd->add_option("--split", predict_split, "split label for the corpus (default test)");
  predict_cmd->add_option("--output-dir", predict_output, "output directory (default rolelab-predict)");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "compute metrics reports from prediction dumps");
  std::string eval_dump, eval_sprl_dump, eval_output, eval_id = "evaluation";
  std::vector<std::string> eval_tables;
  eval_cmd->add_option("--dump", eval_dump, "tag dump file")->required();
  eval_cmd->add_option("--sprl-dump", eval_sprl_dump, "SPRL dump file");
  eval_cmd->add_option("--table", eval_tables, "tables to emit: srl, span, head, sprl (default: all derivable)");
  eval_cmd->add_option("--id", eval_id, "experiment id printed in the tables");
  eval_cmd->add_option("--output-dir", eval_output, "directory for CSV reports (optional)");

  // diagnose-heads
  auto* diag_cmd = app.add_subcommand("diagnose-heads", "head-consistency diagnostics from a tag dump");
  std::string diag_dump, diag_output;
  diag_cmd->add_option("--dump", diag_dump, "tag dump file")->required();
  diag_cmd->add_option("--output-dir", diag_output, "directory for the JSON report (optional)");

  // matrix
  auto* matrix_cmd = app.add_subcommand("matrix", "train and evaluate a whole experiment matrix");
  std::string matrix_config, matrix_output = "rolelab-matrix";
  std::vector<std::string> matrix_sets;
  int matrix_jobs = 1;
  matrix_cmd->add_option("--config", matrix_config, "matrix JSON config")->required();
  matrix_cmd->add_option("--set", matrix_sets, "override base config entries, key=value");
  matrix_cmd->add_option("--jobs", matrix_jobs, "parallel cell workers (default 1)");
  matrix_cmd->add_option("--output-dir", matrix_output, "output directory (default rolelab-matrix)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (convert->parsed()) {
    return run_guarded(convert_output, [&] {
      ConvertSummary summary = convert_source(convert_input, convert_output, convert_threshold);
      std::cout << summary.to_string();
      write_manifest(convert_output, "convert", {}, 0,
                     {{"input", convert_input}, {"threshold", std::to_string(convert_threshold)}});
    });
  }

  if (train_cmd->parsed()) {
    return run_guarded(train_output, [&] {
      std::map<std::string, std::string> kv;
      ExperimentConfig cfg = config_from_cli(train_config, train_sets, train_seed, &kv);
      if (cfg.train_path.empty() || cfg.dev_path.empty())
        throw ConfigError("train: config must set train_path and dev_path");
      Corpus train_corpus = load_corpus(cfg.train_path, Split::train);
      Corpus dev_corpus = load_corpus(cfg.dev_path, Split::dev);
      auto provider = make_provider(cfg);
      StopwordSet stopwords = stopwords_for(cfg);

      TrainRun run = rolelab::train(cfg, train_corpus, dev_corpus, *provider, stopwords);

      fs::create_directories(train_output);
      run.main.checkpoint.save((fs::path(train_output) / "checkpoint.json").string());
      {
        std::ofstream log(fs::path(train_output) / "log.csv");
        log << run.main.log_csv();
      }
      if (run.upstream) {
        std::ofstream log(fs::path(train_output) / "upstream_log.csv");
        log << run.upstream->log_csv();
        run.upstream->checkpoint.save((fs::path(train_output) / "upstream_checkpoint.json").string());
      }
      write_manifest(train_output, "train", kv, cfg.seed,
                     {{"best_epoch", std::to_string(run.main.best_epoch)},
                      {"epochs_run", std::to_string(run.main.epochs_run)}});
      char buf[32];
      snprintf(buf, sizeof(buf), "%.6f", run.main.best_dev_loss);
      std::cout << "trained " << run.main.epochs_run << " epochs; best dev loss " << buf << " at epoch "
                << run.main.best_epoch << "\n";
      if (run.upstream)
        std::cout << "upstream span/head pipeline: " << run.upstream->epochs_run << " epochs, best epoch "
                  << run.upstream->best_epoch << "\n";
      std::cout << "checkpoint: " << (fs::path(train_output) / "checkpoint.json").string() << "\n";
    });
  }

  if (predict_cmd->parsed()) {
    return run_guarded(predict_output, [&] {
      auto split = split_from_string(predict_split);
      if (!split) throw ConfigError("predict: unknown split '" + predict_split + "'");
      Checkpoint ckpt = Checkpoint::load(predict_ckpt);
      ExperimentConfig cfg = ExperimentConfig::from_map(ckpt.config);
      Corpus corpus = load_corpus(predict_corpus_path, *split);
      auto provider = make_provider(cfg);
      StopwordSet stopwords = stopwords_for(cfg);

      JointModel model(cfg, provider->dimension());
      Checkpoint::restore(ckpt.tensors, model.params);
      std::unique_ptr<JointModel> upstream;
      if (!ckpt.upstream_tensors.empty()) {
        upstream = std::make_unique<JointModel>(upstream_config(cfg), provider->dimension());
        Checkpoint::restore(ckpt.upstream_tensors, upstream->params);
      }

      PredictionOutput out = predict_corpus(model, upstream.get(), corpus, *provider, stopwords);
      fs::create_directories(predict_output);
      write_tag_dumps(out.tags, (fs::path(predict_output) / "tag_dump.jsonl").string());
      if (!out.sprl.empty())
        write_sprl_dumps(out.sprl, (fs::path(predict_output) / "sprl_dump.jsonl").string());
      write_manifest(predict_output, "predict", ckpt.config, ckpt.seed,
                     {{"checkpoint", predict_ckpt}, {"corpus", predict_corpus_path}});
      std::cout << "dumped " << out.tags.size() << " instances";
      if (!out.sprl.empty()) std::cout << " and " << out.sprl.size() << " SPRL pairs";
      std::cout << " to " << predict_output << "\n";
    });
  }

  if (eval_cmd->parsed()) {
    return run_guarded(eval_output, [&] {
      std::vector<InstanceDump> dumps = read_tag_dumps(eval_dump);
      std::vector<SprlDump> sprl_dumps;
      if (!eval_sprl_dump.empty()) sprl_dumps = read_sprl_dumps(eval_sprl_dump);

      std::vector<std::string> kinds = eval_tables;
      if (kinds.empty()) {
        kinds = {"span", "head"};
        for (const auto& d : dumps)
          if (!d.pred_srl.empty()) {
            kinds.insert(kinds.begin(), "srl");
            break;
          }
        if (!sprl_dumps.empty()) kinds.push_back("sprl");
      }

      if (!eval_output.empty()) fs::create_directories(eval_output);
      for (const std::string& kind : kinds) {
        MetricsReport report;
        TableLayout layout;
        if (kind == "srl") {
          report = srl_report_from_dumps(dumps, eval_id);
          layout = srl_table_layout();
        } else if (kind == "span") {
          report = span_report_from_dumps(dumps, eval_id);
          layout = span_table_layout();
        } else if (kind == "head") {
          report = head_report_from_dumps(dumps, eval_id);
          layout = head_table_layout();
        } else if (kind == "sprl") {
          if (sprl_dumps.empty()) throw DataError("evaluate: sprl table requested but no --sprl-dump given");
          report = sprl_report_from_dumps(sprl_dumps, eval_id);
          layout = sprl_table_layout();
        } else {
          throw ConfigError("evaluate: unknown table kind '" + kind + "'");
        }
        std::cout << "== " << kind << " ==\n" << render_report_text({report}, layout) << "\n";
        if (!eval_output.empty()) {
          std::ofstream csv(fs::path(eval_output) / (kind + "_report.csv"));
          csv << render_report_csv({report}, layout);
        }
      }
      if (!eval_output.empty())
        write_manifest(eval_output, "evaluate", {}, 0, {{"dump", eval_dump}, {"sprl_dump", eval_sprl_dump}});
    });
  }

  if (diag_cmd->parsed()) {
    return run_guarded(diag_output, [&] {
      std::vector<InstanceDump> dumps = read_tag_dumps(diag_dump);
      HeadConsistencyReport report = diagnose_heads_from_dumps(dumps);
      std::cout << render_head_consistency(report);
      if (!diag_output.empty()) {
        fs::create_directories(diag_output);
        nlohmann::ordered_json doc;
        doc["total_head_predictions"] = report.total_head_predictions;
        doc["total_spans"] = report.total_spans;
        doc["outside_span_heads"] = report.outside_span_heads;
        doc["zero_head_spans"] = report.zero_head_spans;
        doc["multi_head_spans"] = report.multi_head_spans;
        doc["outside_rate"] = report.outside_rate();
        doc["zero_head_rate"] = report.zero_head_rate();
        doc["multi_head_rate"] = report.multi_head_rate();
        std::ofstream out(fs::path(diag_output) / "head_consistency.json");
        out << doc.dump(2) << "\n";
        write_manifest(diag_output, "diagnose-heads", {}, 0, {{"dump", diag_dump}});
      }
    });
  }

  if (matrix_cmd->parsed()) {
    return run_guarded(matrix_output, [&] {
      MatrixSpec spec = load_matrix_spec(matrix_config);
      std::map<std::string, std::string> overrides;
      apply_overrides(overrides, matrix_sets);
      fs::create_directories(matrix_output);
      MatrixResult result = run_experiment_matrix(spec, overrides, matrix_output, matrix_jobs);

      for (const auto& cell : result.cells) {
        if (cell.ok)
          std::cout << "[ok]   " << cell.name << " (best epoch " << cell.best_epoch << ")\n";
        else
          std::cout << "[fail] " << cell.name << ": " << cell.error << "\n";
      }
      for (const auto& [kind, text] : result.consolidated_text)
        std::cout << "\n== " << kind << " ==\n" << text;
      write_manifest(matrix_output, "matrix", spec.base, 0,
                     {{"matrix", spec.name},
                      {"cells", std::to_string(spec.cells.size())},
                      {"failures", std::to_string(result.failures())}});
      if (result.failures() == static_cast<long>(result.cells.size()))
        throw Error("matrix: every cell failed; see the per-cell messages above");
    });
  }

  return 0;
}
