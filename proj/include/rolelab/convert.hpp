#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "rolelab/corpus_io.hpp"

namespace rolelab {

// One-way converter from the tab-separated source layout (tokenized sentences
// plus SRL spans/heads plus per-property proto-role responses) to the
// canonical JSON-lines corpora. Sentences whose proto-role annotations cannot
// be matched to an SRL entry are dropped whole, mirroring the original
// filtering of sentences without usable PropBank annotation.
//
// Expected files under the input directory:
//   sentences.tsv   sentence_id <TAB> split <TAB> space-separated tokens
//   srl.tsv         sentence_id <TAB> predicate_index <TAB> spans
//                   spans = ';'-separated start:end:role[:head], or '-' for none
//   protoroles.tsv  sentence_id <TAB> predicate_index <TAB> start <TAB> end
//                   <TAB> property <TAB> response <TAB> applicable
struct ConvertSummary {
  struct SplitCounts {
    long sentences = 0;
    long instances = 0;
    long spans = 0;
    long rated_spans = 0;
  };
  std::map<Split, SplitCounts> kept;
  long dropped_sentences = 0;     // proto-role annotation with no matching SRL entry
  long unannotated_sentences = 0; // listed in sentences.tsv but never annotated

  std::string to_string() const {
    std::ostringstream out;
    for (Split split : {Split::train, Split::dev, Split::test}) {
      auto it = kept.find(split);
      ConvertSummary::SplitCounts c = it == kept.end() ? SplitCounts{} : it->second;
      out << rolelab::to_string(split) << ": " << c.sentences << " sentences, " << c.instances
          << " predicate instances, " << c.spans << " argument spans (" << c.rated_spans << " rated)\n";
    }
    out << "dropped: " << dropped_sentences << " sentences without matching SRL annotation, "
        << unannotated_sentences << " without any annotation\n";
    return out.str();
  }
};

namespace detail {

inline std::vector<std::string> split_on(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

struct SourceSentence {
  Split split = Split::train;
  std::vector<std::string> tokens;
};

}  // namespace detail

inline ConvertSummary convert_source(const std::string& input_dir, const std::string& output_dir, int threshold) {
  namespace fs = std::filesystem;
  if (threshold < 1 || threshold > 4) throw ConfigError("convert: threshold must be in 1..4");
  auto open_required = [&](const std::string& name) {
    std::ifstream in(input_dir + "/" + name);
    if (!in) throw DataError("convert: missing source file '" + input_dir + "/" + name + "'");
    return in;
  };

  // sentences
  std::map<std::string, detail::SourceSentence> sentences;
  {
    std::ifstream in = open_required("sentences.tsv");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const std::string where = "sentences.tsv:" + std::to_string(line_no);
      auto fields = detail::split_on(line, '\t');
      if (fields.size() != 3) throw ParseError(where + ": expected 3 tab-separated fields");
      auto split = split_from_string(fields[1]);
      if (!split) throw ParseError(where + ": unknown split '" + fields[1] + "'");
      if (sentences.count(fields[0])) throw ParseError(where + ": duplicate sentence id '" + fields[0] + "'");
      detail::SourceSentence src;
      src.split = *split;
      std::istringstream toks(fields[2]);
      std::string tok;
      while (toks >> tok) src.tokens.push_back(tok);
      if (src.tokens.empty()) throw ParseError(where + ": sentence has no tokens");
      sentences[fields[0]] = std::move(src);
    }
  }

  // srl entries
  std::map<std::pair<std::string, int>, std::vector<ArgumentSpan>> srl;
  {
    std::ifstream in = open_required("srl.tsv");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const std::string where = "srl.tsv:" + std::to_string(line_no);
      auto fields = detail::split_on(line, '\t');
      if (fields.size() != 3) throw ParseError(where + ": expected 3 tab-separated fields");
      if (!sentences.count(fields[0])) throw ParseError(where + ": unknown sentence id '" + fields[0] + "'");
      int pred = 0;
      try {
        pred = std::stoi(fields[1]);
      } catch (const std::exception&) {
        throw ParseError(where + ": bad predicate index '" + fields[1] + "'");
      }
      auto key = std::make_pair(fields[0], pred);
      if (srl.count(key)) throw ParseError(where + ": duplicate predicate entry");
      std::vector<ArgumentSpan> spans;
      if (fields[2] != "-" && !fields[2].empty()) {
        for (const auto& chunk : detail::split_on(fields[2], ';')) {
          auto parts = detail::split_on(chunk, ':');
          if (parts.size() != 3 && parts.size() != 4)
            throw ParseError(where + ": span must be start:end:role[:head], got '" + chunk + "'");
          ArgumentSpan span;
          try {
            span.start = std::stoi(parts[0]);
            span.end = std::stoi(parts[1]);
          } catch (const std::exception&) {
            throw ParseError(where + ": bad span bounds in '" + chunk + "'");
          }
          auto role = role_from_string(parts[2]);
          if (!role) throw ParseError(where + ": unknown role '" + parts[2] + "'");
          span.role = role;
          if (parts.size() == 4 && parts[3] != "-") {
            try {
              span.head_index = std::stoi(parts[3]);
            } catch (const std::exception&) {
              throw ParseError(where + ": bad head index in '" + chunk + "'");
            }
          }
          spans.push_back(span);
        }
      }
      std::sort(spans.begin(), spans.end(),
                [](const ArgumentSpan& a, const ArgumentSpan& b) { return a.start < b.start; });
      srl[key] = std::move(spans);
    }
  }

  // proto-role responses; sentences with unmatched entries get dropped whole
  std::set<std::string> dropped;
  {
    std::ifstream in = open_required("protoroles.tsv");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      const std::string where = "protoroles.tsv:" + std::to_string(line_no);
      auto fields = detail::split_on(line, '\t');
      if (fields.size() != 7) throw ParseError(where + ": expected 7 tab-separated fields");
      const std::string& sid = fields[0];
      if (!sentences.count(sid)) throw ParseError(where + ": unknown sentence id '" + sid + "'");
      int pred = 0, start = 0, end = 0;
      try {
        pred = std::stoi(fields[1]);
        start = std::stoi(fields[2]);
        end = std::stoi(fields[3]);
      } catch (const std::exception&) {
        throw ParseError(where + ": bad indices");
      }
      auto prop = property_from_string(fields[4]);
      if (!prop) throw ParseError(where + ": unknown property '" + fields[4] + "'");
      bool applicable;
      if (fields[6] == "true" || fields[6] == "1") applicable = true;
      else if (fields[6] == "false" || fields[6] == "0") applicable = false;
      else throw ParseError(where + ": applicable must be true/false");
      Rating rating = Rating::not_applicable();
      if (applicable) {
        int response = 0;
        try {
          response = std::stoi(fields[5]);
        } catch (const std::exception&) {
          throw ParseError(where + ": bad response '" + fields[5] + "'");
        }
        if (response < 1 || response > 5) throw ParseError(where + ": response must be in 1..5");
        rating = Rating::of(response);
      }

      auto key = std::make_pair(sid, pred);
      auto it = srl.find(key);
      if (it == srl.end()) {
        dropped.insert(sid);  // no PropBank annotation located for this predicate
        continue;
      }
      ArgumentSpan* target = nullptr;
      for (auto& span : it->second)
        if (span.start == start && span.end == end) target = &span;
      if (!target) {
        dropped.insert(sid);  // rated span does not line up with any SRL span
        continue;
      }
      if (target->protoroles.count(*prop)) throw ParseError(where + ": duplicate rating for one span/property");
      target->protoroles[*prop] = rating;
    }
  }

  // assemble per-split corpora
  std::map<Split, Corpus> corpora;
  for (Split split : {Split::train, Split::dev, Split::test}) corpora[split].split = split;
  ConvertSummary summary;
  std::set<std::string> annotated;
  for (const auto& [key, spans] : srl) annotated.insert(key.first);

  for (const auto& [key, spans] : srl) {
    const auto& [sid, pred] = key;
    if (dropped.count(sid)) continue;
    const detail::SourceSentence& src = sentences.at(sid);
    Sentence sent;
    sent.id = sid;
    sent.tokens = src.tokens;
    PredicateInstance inst;
    inst.sentence_id = sid;
    inst.predicate_index = pred;
    inst.argument_spans = spans;
    validate_instance(inst, sent.length());  // names the instance on failure

    Corpus& corpus = corpora.at(src.split);
    bool new_sentence = corpus.find_sentence(sid) == nullptr;
    corpus.add_sentence(std::move(sent));
    corpus.instances.push_back(std::move(inst));

    auto& counts = summary.kept[src.split];
    if (new_sentence) ++counts.sentences;
    ++counts.instances;
    counts.spans += static_cast<long>(spans.size());
    for (const auto& span : spans)
      if (!span.protoroles.empty()) ++counts.rated_spans;
  }
  summary.dropped_sentences = static_cast<long>(dropped.size());
  for (const auto& [sid, src] : sentences)
    if (!annotated.count(sid) && !dropped.count(sid)) ++summary.unannotated_sentences;

  fs::create_directories(output_dir);
  for (Split split : {Split::train, Split::dev, Split::test})
    save_corpus(corpora.at(split), output_dir + "/" + to_string(split) + ".jsonl", threshold);
  return summary;
}

}  // namespace rolelab
