#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "helpers.hpp"
#include "rolelab/corpus_io.hpp"
#include "rolelab/dumps.hpp"
#include "rolelab/evaluation.hpp"

using namespace rolelab;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;
};

CliResult run_cli(const std::string& args, const std::string& log_path) {
  std::string cmd = std::string(ROLELAB_CLI_PATH) + " " + args + " > " + log_path + " 2>&1";
  int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = testutil::read_file(log_path);
  return r;
}

}  // namespace

TEST_CASE("cli: usage errors exit with code 2") {
  testutil::TempDir dir("cli_usage");
  CHECK(run_cli("no-such-command", dir.file("log1")).exit_code == 2);
  CHECK(run_cli("train", dir.file("log2")).exit_code == 2);  // missing --config
  CHECK(run_cli("--help", dir.file("log3")).exit_code == 0);

  // missing source data: exit 2 with a message
  auto r = run_cli("convert --input " + dir.file("nowhere") + " --output " + dir.file("out"), dir.file("log4"));
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("missing source file") != std::string::npos);
}

TEST_CASE("cli: convert, train, predict, evaluate, diagnose-heads pipeline") {
  testutil::TempDir dir("cli_pipe");

  // source data + conversion
  testutil::write_toy_source_dir(dir.path().string(), 8, 3, 3, 13);
  auto conv = run_cli("convert --input " + dir.path().string() + " --output " + dir.file("data") +
                          " --threshold 2",
                      dir.file("conv.log"));
  REQUIRE(conv.exit_code == 0);
  CHECK(conv.output.find("train: 8 sentences") != std::string::npos);
  CHECK(conv.output.find("dropped: 1") != std::string::npos);

  // config + embeddings
  testutil::write_toy_embedding_file(dir.file("emb.txt"), 6, 3);
  std::ostringstream cfg;
  cfg << "train_path = " << dir.file("data") << "/train.jsonl\n"
      << "dev_path = " << dir.file("data") << "/dev.jsonl\n"
      << "test_path = " << dir.file("data") << "/test.jsonl\n"
      << "embedding_kind = static\n"
      << "embedding_file = " << dir.file("emb.txt") << "\n"
      << "task_mode = mtl\n"
      << "head_source = gold\n"
      << "hidden_dim = 8\n"
      << "max_epochs = 12\n"
      << "patience = 12\n"
      << "batch_size = 4\n"
      << "seed = 5\n";
  testutil::write_file(dir.file("exp.cfg"), cfg.str());

  auto train = run_cli("train --config " + dir.file("exp.cfg") + " --output-dir " + dir.file("run"),
                       dir.file("train.log"));
  REQUIRE(train.exit_code == 0);
  CHECK(train.output.find("best dev loss") != std::string::npos);
  CHECK(std::filesystem::exists(dir.file("run") + "/checkpoint.json"));
  CHECK(std::filesystem::exists(dir.file("run") + "/log.csv"));
  CHECK(std::filesystem::exists(dir.file("run") + "/manifest.json"));

  auto predict = run_cli("predict --checkpoint " + dir.file("run") + "/checkpoint.json --corpus " +
                             dir.file("data") + "/test.jsonl --output-dir " + dir.file("pred"),
                         dir.file("pred.log"));
  REQUIRE(predict.exit_code == 0);
  REQUIRE(std::filesystem::exists(dir.file("pred") + "/tag_dump.jsonl"));
  REQUIRE(std::filesystem::exists(dir.file("pred") + "/sprl_dump.jsonl"));

  auto eval = run_cli("evaluate --dump " + dir.file("pred") + "/tag_dump.jsonl --sprl-dump " +
                          dir.file("pred") + "/sprl_dump.jsonl --output-dir " + dir.file("eval"),
                      dir.file("eval.log"));
  REQUIRE(eval.exit_code == 0);
  // report file exists with the full 14-row SRL table
  auto reports = parse_report_csv(testutil::read_file(dir.file("eval") + "/srl_report.csv"));
  REQUIRE(reports.size() == 1);
  CHECK(reports[0].labels.size() == 14);
  auto sprl_reports = parse_report_csv(testutil::read_file(dir.file("eval") + "/sprl_report.csv"));
  CHECK(sprl_reports[0].labels.size() == 18);

  // a requested table that cannot be derived is a user error
  auto eval_bad = run_cli("evaluate --dump " + dir.file("pred") + "/tag_dump.jsonl --table sprl",
                          dir.file("evalbad.log"));
  CHECK(eval_bad.exit_code == 2);

  auto diag = run_cli("diagnose-heads --dump " + dir.file("pred") + "/tag_dump.jsonl --output-dir " +
                          dir.file("diag"),
                      dir.file("diag.log"));
  REQUIRE(diag.exit_code == 0);
  CHECK(diag.output.find("outside any span") != std::string::npos);

  // the JSON report matches an in-process recount of the same dump
  auto dumps = read_tag_dumps(dir.file("pred") + "/tag_dump.jsonl");
  HeadConsistencyReport recount = diagnose_heads_from_dumps(dumps);
  auto doc = nlohmann::json::parse(testutil::read_file(dir.file("diag") + "/head_consistency.json"));
  CHECK(doc["total_spans"].get<long>() == recount.total_spans);
  CHECK(doc["outside_span_heads"].get<long>() == recount.outside_span_heads);
  CHECK(doc["zero_head_spans"].get<long>() == recount.zero_head_spans);
  CHECK(doc["multi_head_spans"].get<long>() == recount.multi_head_spans);
}

TEST_CASE("cli: matrix over two cells produces a consolidated report") {
  testutil::TempDir dir("cli_matrix");
  Corpus train_set = testutil::make_toy_corpus(6, 41);
  Corpus dev_set = testutil::make_toy_corpus(2, 42, "dev");
  Corpus test_set = testutil::make_toy_corpus(2, 43, "test");
  save_corpus(train_set, dir.file("train.jsonl"));
  save_corpus(dev_set, dir.file("dev.jsonl"));
  save_corpus(test_set, dir.file("test.jsonl"));
  testutil::write_toy_embedding_file(dir.file("emb.txt"), 5, 7);

  nlohmann::ordered_json spec;
  spec["name"] = "toy";
  spec["reports"] = {"srl"};
  spec["base"] = {{"train_path", dir.file("train.jsonl")}, {"dev_path", dir.file("dev.jsonl")},
                  {"test_path", dir.file("test.jsonl")},   {"embedding_kind", "static"},
                  {"embedding_file", dir.file("emb.txt")}, {"task_mode", "srl_only"},
                  {"head_source", "none"},                 {"hidden_dim", "6"},
                  {"max_epochs", "2"},                     {"batch_size", "4"},
                  {"seed", "3"}};
  spec["cells"] = nlohmann::ordered_json::array();
  spec["cells"].push_back({{"name", "SRL-only Baseline"}, {"set", nlohmann::ordered_json::object()}});
  spec["cells"].push_back(
      {{"name", "SRL-only, gold spans + heads"},
       {"set", {{"span_source", "gold"}, {"head_source", "gold"}}}});
  testutil::write_file(dir.file("matrix.json"), spec.dump(2));

  auto r = run_cli("matrix --config " + dir.file("matrix.json") + " --output-dir " + dir.file("mx"),
                   dir.file("matrix.log"));
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("[ok]   SRL-only Baseline") != std::string::npos);
  CHECK(r.output.find("[ok]   SRL-only, gold spans + heads") != std::string::npos);

  auto reports = parse_report_csv(testutil::read_file(dir.file("mx") + "/report_srl.csv"));
  REQUIRE(reports.size() == 2);
  CHECK(reports[0].experiment_id == "SRL-only Baseline");
  CHECK(reports[1].experiment_id == "SRL-only, gold spans + heads");
  CHECK(reports[0].labels.size() == 14);
  CHECK(std::filesystem::exists(dir.file("mx") + "/cells/SRL-only_Baseline/checkpoint.json"));

  // non-baseline columns carry per-label deltas against the first column
  std::string text = testutil::read_file(dir.file("mx") + "/report_srl.txt");
  CHECK((text.find("(+") != std::string::npos || text.find("(-") != std::string::npos));
}
