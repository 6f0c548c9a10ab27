#pragma once

#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <thread>
#include <vector>

#include "rolelab/corpus_io.hpp"
#include "rolelab/predict.hpp"

namespace rolelab {

// Experiment matrix: a base config plus one override set per cell, with the
// consolidated report kinds to emit. JSON file:
//   {"name": ..., "reports": ["sprl"], "base": {key: value, ...},
//    "cells": [{"name": "...", "set": {key: value, ...}}, ...]}
struct MatrixCell {
  std::string name;
  std::map<std::string, std::string> overrides;
};

struct MatrixSpec {
  std::string name;
  std::vector<std::string> reports;
  std::map<std::string, std::string> base;
  std::vector<MatrixCell> cells;
};

inline MatrixSpec load_matrix_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open matrix config '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("matrix config '" + path + "': " + e.what());
  }
  MatrixSpec spec;
  spec.name = doc.value("name", "matrix");
  for (const auto& r : doc.value("reports", nlohmann::json::array())) {
    std::string kind = r.get<std::string>();
    if (kind != "srl" && kind != "sprl" && kind != "span" && kind != "head")
      throw ConfigError("matrix config: unknown report kind '" + kind + "'");
    spec.reports.push_back(kind);
  }
  if (spec.reports.empty()) throw ConfigError("matrix config: 'reports' must name at least one table");
  if (doc.contains("base"))
    for (const auto& [k, v] : doc.at("base").items()) spec.base[k] = v.get<std::string>();
  if (!doc.contains("cells") || doc.at("cells").empty()) throw ConfigError("matrix config: no cells");
  for (const auto& c : doc.at("cells")) {
    MatrixCell cell;
    cell.name = c.at("name").get<std::string>();
    if (c.contains("set"))
      for (const auto& [k, v] : c.at("set").items()) cell.overrides[k] = v.get<std::string>();
    spec.cells.push_back(std::move(cell));
  }
  return spec;
}

struct CellOutcome {
  std::string name;
  bool ok = false;
  std::string error;
  int best_epoch = 0;
  double best_dev_loss = 0.0;
  std::map<std::string, MetricsReport> reports;  // by kind
};

struct MatrixResult {
  std::vector<CellOutcome> cells;
  std::map<std::string, std::string> consolidated_csv;
  std::map<std::string, std::string> consolidated_text;

  long failures() const {
    long n = 0;
    for (const auto& c : cells) n += c.ok ? 0 : 1;
    return n;
  }
};

namespace detail {

inline std::string sanitize_name(const std::string& name) {
  std::string out = name;
  for (char& c : out)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_')) c = '_';
  return out;
}

inline TableLayout layout_for(const std::string& kind) {
  if (kind == "srl") return srl_table_layout();
  if (kind == "sprl") return sprl_table_layout();
  if (kind == "span") return span_table_layout();
  return head_table_layout();
}

// Trains one cell, evaluates it on the test split, and writes its artifacts.
inline CellOutcome run_cell(const MatrixSpec& spec, const MatrixCell& cell,
                            const std::map<std::string, std::string>& extra_overrides,
                            const std::string& output_dir) {
  namespace fs = std::filesystem;
  CellOutcome outcome;
  outcome.name = cell.name;
  try {
    std::map<std::string, std::string> kv = spec.base;
    for (const auto& [k, v] : cell.overrides) kv[k] = v;
    for (const auto& [k, v] : extra_overrides) kv[k] = v;
    ExperimentConfig cfg = ExperimentConfig::from_map(kv);
    if (cfg.train_path.empty() || cfg.dev_path.empty() || cfg.test_path.empty())
      throw ConfigError("matrix cell '" + cell.name + "': train/dev/test paths must be set");

    Corpus train_corpus = load_corpus(cfg.train_path, Split::train);
    Corpus dev_corpus = load_corpus(cfg.dev_path, Split::dev);
    Corpus test_corpus = load_corpus(cfg.test_path, Split::test);
    auto provider = make_provider(cfg);
    StopwordSet stopwords = stopwords_for(cfg);

    TrainRun run = train(cfg, train_corpus, dev_corpus, *provider, stopwords);
    outcome.best_epoch = run.main.best_epoch;
    outcome.best_dev_loss = run.main.best_dev_loss;

    PredictionOutput predictions =
        predict_corpus(*run.model, run.upstream_model.get(), test_corpus, *provider, stopwords);

    for (const std::string& kind : spec.reports) {
      try {
        MetricsReport report;
        if (kind == "srl") report = srl_report_from_dumps(predictions.tags, cell.name);
        else if (kind == "span") report = span_report_from_dumps(predictions.tags, cell.name);
        else if (kind == "head") report = head_report_from_dumps(predictions.tags, cell.name);
        else report = sprl_report_from_dumps(predictions.sprl, cell.name);
        report.config_echo = cfg.to_map();
        outcome.reports[kind] = std::move(report);
      } catch (const DataError&) {
        // this cell does not produce the table (e.g. srl table for an
        // sprl_only cell); the consolidated report just skips the column
      }
    }

    if (!output_dir.empty()) {
      fs::path cell_dir = fs::path(output_dir) / "cells" / sanitize_name(cell.name);
      fs::create_directories(cell_dir);
      run.main.checkpoint.save((cell_dir / "checkpoint.json").string());
      std::ofstream log(cell_dir / "log.csv");
      log << run.main.log_csv();
      if (run.upstream) {
        std::ofstream up_log(cell_dir / "upstream_log.csv");
        up_log << run.upstream->log_csv();
        run.upstream->checkpoint.save((cell_dir / "upstream_checkpoint.json").string());
      }
      write_tag_dumps(predictions.tags, (cell_dir / "tag_dump.jsonl").string());
      if (!predictions.sprl.empty()) write_sprl_dumps(predictions.sprl, (cell_dir / "sprl_dump.jsonl").string());
      nlohmann::ordered_json manifest;
      manifest["command"] = "matrix-cell";
      manifest["cell"] = cell.name;
      manifest["version"] = kVersion;
      manifest["config"] = cfg.to_map();
      manifest["config_hash"] = config_hash(cfg.to_map());
      manifest["seed"] = cfg.seed;
      manifest["best_epoch"] = run.main.best_epoch;
      std::ofstream mf(cell_dir / "manifest.json");
      mf << manifest.dump(2) << "\n";
    }
    outcome.ok = true;
  } catch (const std::exception& e) {
    outcome.ok = false;
    outcome.error = e.what();
  }
  return outcome;
}

}  // namespace detail

// Runs every cell (continuing past failures), then consolidates the
// requested tables with one column per succeeding cell, in matrix order.
inline MatrixResult run_experiment_matrix(const MatrixSpec& spec,
                                          const std::map<std::string, std::string>& extra_overrides = {},
                                          const std::string& output_dir = "", int jobs = 1) {
  MatrixResult result;
  result.cells.resize(spec.cells.size());

  if (jobs <= 1) {
    for (size_t i = 0; i < spec.cells.size(); ++i)
      result.cells[i] = detail::run_cell(spec, spec.cells[i], extra_overrides, output_dir);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&]() {
      while (true) {
        size_t i = next.fetch_add(1);
        if (i >= spec.cells.size()) break;
        result.cells[i] = detail::run_cell(spec, spec.cells[i], extra_overrides, output_dir);
      }
    };
    std::vector<std::thread> pool;
    int n = std::min<int>(jobs, static_cast<int>(spec.cells.size()));
    pool.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const std::string& kind : spec.reports) {
    std::vector<MetricsReport> columns;
    for (const auto& cell : result.cells) {
      auto it = cell.reports.find(kind);
      if (cell.ok && it != cell.reports.end()) columns.push_back(it->second);
    }
    if (columns.empty()) continue;
    TableLayout layout = detail::layout_for(kind);
    result.consolidated_csv[kind] = render_report_csv(columns, layout);
    // per-label deltas against the first (baseline) column
    result.consolidated_text[kind] = render_report_text(columns, layout, /*mark_deltas=*/true);
    if (!output_dir.empty()) {
      std::ofstream csv(std::filesystem::path(output_dir) / ("report_" + kind + ".csv"));
      csv << result.consolidated_csv[kind];
      std::ofstream txt(std::filesystem::path(output_dir) / ("report_" + kind + ".txt"));
      txt << result.consolidated_text[kind];
    }
  }
  return result;
}

}  // namespace rolelab
