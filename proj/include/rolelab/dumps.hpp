#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rolelab/evaluation.hpp"
#include "rolelab/taggers.hpp"

namespace rolelab {

// Per-instance prediction record: gold and predicted tag sequences for
// span/head/SRL plus the selected head per argument span. Consumed by the
// evaluation module, the diagnostics, and humans doing error analysis.
struct InstanceDump {
  std::string sentence_id;
  int instance_index = 0;
  std::vector<std::string> tokens;
  int predicate_index = 0;
  std::vector<SpanTag> gold_span, pred_span;
  std::vector<HeadTag> gold_head, pred_head;
  std::vector<SRLTag> gold_srl, pred_srl;  // may be empty for runs without SRL
  struct SelectedHead {
    int start = 0, end = 0, head_index = -1;
  };
  std::vector<SelectedHead> selected_heads;
};

struct SprlDump {
  std::string sentence_id;
  int instance_index = 0;
  int span_start = 0, span_end = 0;
  int head_index = 0;
  struct Entry {
    double probability = 0.0;  // positive class
    int predicted = 0;
    int gold = 0;
  };
  std::map<std::string, Entry> properties;  // rated properties only
};

namespace detail {

template <typename Tag>
nlohmann::ordered_json tags_to_json(const std::vector<Tag>& tags) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (Tag t : tags) arr.push_back(to_string(t));
  return arr;
}

template <typename Tag>
std::vector<Tag> tags_from_json(const nlohmann::json& arr, std::optional<Tag> (*parse)(const std::string&),
                                const std::string& where) {
  std::vector<Tag> out;
  for (const auto& v : arr) {
    auto tag = parse(v.template get<std::string>());
    if (!tag) throw ParseError(where + ": unknown tag '" + v.template get<std::string>() + "'");
    out.push_back(*tag);
  }
  return out;
}

}  // namespace detail

inline void write_tag_dumps(const std::vector<InstanceDump>& dumps, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dump file '" + path + "'");
  for (const auto& d : dumps) {
    nlohmann::ordered_json rec;
    rec["sentence_id"] = d.sentence_id;
    rec["instance_index"] = d.instance_index;
    rec["tokens"] = d.tokens;
    rec["predicate_index"] = d.predicate_index;
    nlohmann::ordered_json gold;
    gold["span_tags"] = detail::tags_to_json(d.gold_span);
    gold["head_tags"] = detail::tags_to_json(d.gold_head);
    if (!d.gold_srl.empty()) gold["srl_tags"] = detail::tags_to_json(d.gold_srl);
    rec["gold"] = gold;
    nlohmann::ordered_json pred;
    pred["span_tags"] = detail::tags_to_json(d.pred_span);
    pred["head_tags"] = detail::tags_to_json(d.pred_head);
    if (!d.pred_srl.empty()) pred["srl_tags"] = detail::tags_to_json(d.pred_srl);
    rec["predicted"] = pred;
    nlohmann::ordered_json heads = nlohmann::ordered_json::array();
    for (const auto& h : d.selected_heads) {
      nlohmann::ordered_json hj;
      hj["start"] = h.start;
      hj["end"] = h.end;
      hj["head_index"] = h.head_index;
      heads.push_back(hj);
    }
    rec["selected_heads"] = heads;
    out << rec.dump() << "\n";
  }
}

inline std::vector<InstanceDump> read_tag_dumps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dump file '" + path + "'");
  std::vector<InstanceDump> dumps;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(line_no);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": malformed dump record: " + e.what());
    }
    InstanceDump d;
    d.sentence_id = rec.at("sentence_id").get<std::string>();
    d.instance_index = rec.at("instance_index").get<int>();
    for (const auto& t : rec.at("tokens")) d.tokens.push_back(t.get<std::string>());
    d.predicate_index = rec.at("predicate_index").get<int>();
    const auto& gold = rec.at("gold");
    d.gold_span = detail::tags_from_json<SpanTag>(gold.at("span_tags"), &span_tag_from_string, where);
    d.gold_head = detail::tags_from_json<HeadTag>(gold.at("head_tags"), &head_tag_from_string, where);
    if (gold.contains("srl_tags"))
      d.gold_srl = detail::tags_from_json<SRLTag>(gold.at("srl_tags"), &srl_tag_from_string, where);
    const auto& pred = rec.at("predicted");
    d.pred_span = detail::tags_from_json<SpanTag>(pred.at("span_tags"), &span_tag_from_string, where);
    d.pred_head = detail::tags_from_json<HeadTag>(pred.at("head_tags"), &head_tag_from_string, where);
    if (pred.contains("srl_tags"))
      d.pred_srl = detail::tags_from_json<SRLTag>(pred.at("srl_tags"), &srl_tag_from_string, where);
    if (rec.contains("selected_heads")) {
      for (const auto& h : rec.at("selected_heads"))
        d.selected_heads.push_back(
            {h.at("start").get<int>(), h.at("end").get<int>(), h.at("head_index").get<int>()});
    }
    dumps.push_back(std::move(d));
  }
  return dumps;
}

inline void write_sprl_dumps(const std::vector<SprlDump>& dumps, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write SPRL dump file '" + path + "'");
  for (const auto& d : dumps) {
    nlohmann::ordered_json rec;
    rec["sentence_id"] = d.sentence_id;
    rec["instance_index"] = d.instance_index;
    rec["span"] = {{"start", d.span_start}, {"end", d.span_end}};
    rec["head_index"] = d.head_index;
    nlohmann::ordered_json props = nlohmann::ordered_json::object();
    for (const auto& [name, e] : d.properties) {
      nlohmann::ordered_json pj;
      pj["probability"] = e.probability;
      pj["predicted"] = e.predicted;
      pj["gold"] = e.gold;
      props[name] = pj;
    }
    rec["properties"] = props;
    out << rec.dump() << "\n";
  }
}

inline std::vector<SprlDump> read_sprl_dumps(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open SPRL dump file '" + path + "'");
  std::vector<SprlDump> dumps;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": malformed SPRL dump record: " + e.what());
    }
    SprlDump d;
    d.sentence_id = rec.at("sentence_id").get<std::string>();
    d.instance_index = rec.at("instance_index").get<int>();
    d.span_start = rec.at("span").at("start").get<int>();
    d.span_end = rec.at("span").at("end").get<int>();
    d.head_index = rec.at("head_index").get<int>();
    for (const auto& [name, pj] : rec.at("properties").items()) {
      if (!property_from_string(name))
        throw ParseError(path + ":" + std::to_string(line_no) + ": unknown property '" + name + "'");
      d.properties[name] = {pj.at("probability").get<double>(), pj.at("predicted").get<int>(),
                            pj.at("gold").get<int>()};
    }
    dumps.push_back(std::move(d));
  }
  return dumps;
}

// ---------------------------------------------------------------------------
// Reports and diagnostics recomputed from dump files alone
// ---------------------------------------------------------------------------

namespace detail {

template <typename Tag>
std::vector<std::vector<int>> to_ids(const std::vector<InstanceDump>& dumps,
                                     std::vector<Tag> InstanceDump::*member) {
  std::vector<std::vector<int>> out;
  for (const auto& d : dumps) {
    const auto& tags = d.*member;
    if (tags.empty()) continue;
    std::vector<int> ids;
    ids.reserve(tags.size());
    for (Tag t : tags) ids.push_back(static_cast<int>(t));
    out.push_back(std::move(ids));
  }
  return out;
}

}  // namespace detail

inline MetricsReport srl_report_from_dumps(const std::vector<InstanceDump>& dumps, const std::string& id) {
  auto gold = detail::to_ids<SRLTag>(dumps, &InstanceDump::gold_srl);
  auto pred = detail::to_ids<SRLTag>(dumps, &InstanceDump::pred_srl);
  if (gold.empty() || gold.size() != pred.size()) throw DataError("dump contains no usable SRL predictions");
  return report_from_counts(id, tagging_confusion(gold, pred, srl_table_layout().labels));
}

inline MetricsReport span_report_from_dumps(const std::vector<InstanceDump>& dumps, const std::string& id) {
  auto gold = detail::to_ids<SpanTag>(dumps, &InstanceDump::gold_span);
  auto pred = detail::to_ids<SpanTag>(dumps, &InstanceDump::pred_span);
  if (gold.empty()) throw DataError("dump contains no span predictions");
  return report_from_counts(id, tagging_confusion(gold, pred, span_table_layout().labels));
}

inline MetricsReport head_report_from_dumps(const std::vector<InstanceDump>& dumps, const std::string& id) {
  auto gold = detail::to_ids<HeadTag>(dumps, &InstanceDump::gold_head);
  auto pred = detail::to_ids<HeadTag>(dumps, &InstanceDump::pred_head);
  if (gold.empty()) throw DataError("dump contains no head predictions");
  return report_from_counts(id, tagging_confusion(gold, pred, head_table_layout().labels));
}

inline MetricsReport sprl_report_from_dumps(const std::vector<SprlDump>& dumps, const std::string& id) {
  std::vector<std::vector<std::pair<int, int>>> buckets(kNumProperties);
  for (const auto& d : dumps) {
    for (const auto& [name, e] : d.properties) {
      auto prop = property_from_string(name);
      buckets[static_cast<size_t>(*prop)].emplace_back(e.gold, e.predicted);
    }
  }
  return report_from_counts(id, property_confusion(buckets));
}

// Head-consistency diagnostics against the gold argument spans decoded from
// the gold span tags.
inline HeadConsistencyReport diagnose_heads_from_dumps(const std::vector<InstanceDump>& dumps) {
  HeadConsistencyReport total;
  for (const auto& d : dumps) {
    auto spans = nameless_tags_to_spans(d.gold_span);
    total.accumulate(head_consistency_report(d.pred_head, spans));
  }
  return total;
}

inline std::string render_head_consistency(const HeadConsistencyReport& r) {
  std::ostringstream out;
  char buf[64];
  out << "head predictions: " << r.total_head_predictions << " over " << r.total_spans << " spans\n";
  snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * r.outside_rate());
  out << "outside any span: " << r.outside_span_heads << " / " << r.total_head_predictions << " (" << buf << ")\n";
  snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * r.zero_head_rate());
  out << "spans with no head: " << r.zero_head_spans << " / " << r.total_spans << " (" << buf << ")\n";
  snprintf(buf, sizeof(buf), "%.1f%%", 100.0 * r.multi_head_rate());
  out << "spans with 2+ heads: " << r.multi_head_spans << " / " << r.total_spans << " (" << buf << ")\n";
  return out.str();
}

}  // namespace rolelab
