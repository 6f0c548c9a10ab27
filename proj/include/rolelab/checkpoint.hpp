#pragma once

#include <fstream>
#include <map>
#include <string>

#include <json.hpp>

#include "rolelab/autodiff.hpp"
#include "rolelab/config.hpp"

namespace rolelab {

// Self-describing, versioned model container: config echo, seed, best epoch,
// and all tensors by canonical name. When an upstream span/head pipeline
// produced the run's predicted features, its tensors ride along so that
// prediction is self-contained.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  std::map<std::string, std::string> config;
  uint64_t seed = 0;
  int epoch = 0;
  double best_dev_loss = 0.0;
  std::map<std::string, Mat> tensors;
  std::map<std::string, Mat> upstream_tensors;

  static std::map<std::string, Mat> snapshot(const ad::ParameterSet& params) {
    std::map<std::string, Mat> out;
    for (const auto& t : params) out[t->name] = t->value;
    return out;
  }

  // Loads tensor values into a parameter set; the layouts must agree exactly.
  static void restore(const std::map<std::string, Mat>& tensors, ad::ParameterSet& params) {
    size_t used = 0;
    for (auto& t : params) {
      auto it = tensors.find(t->name);
      if (it == tensors.end()) throw DataError("checkpoint: missing tensor '" + t->name + "'");
      if (it->second.rows() != t->rows() || it->second.cols() != t->cols())
        throw DataError("checkpoint: tensor '" + t->name + "' has shape " + std::to_string(it->second.rows()) +
                        "x" + std::to_string(it->second.cols()) + ", model expects " + std::to_string(t->rows()) +
                        "x" + std::to_string(t->cols()));
      t->value = it->second;
      ++used;
    }
    if (used != tensors.size()) throw DataError("checkpoint: tensor count mismatch");
  }

  void save(const std::string& path) const {
    nlohmann::ordered_json doc;
    doc["kind"] = "rolelab-checkpoint";
    doc["format_version"] = kFormatVersion;
    doc["config"] = config;
    doc["seed"] = seed;
    doc["epoch"] = epoch;
    doc["best_dev_loss"] = best_dev_loss;
    auto dump_tensors = [](const std::map<std::string, Mat>& tensors) {
      nlohmann::ordered_json out = nlohmann::ordered_json::object();
      for (const auto& [name, mat] : tensors) {
        nlohmann::ordered_json t;
        t["rows"] = mat.rows();
        t["cols"] = mat.cols();
        nlohmann::ordered_json data = nlohmann::ordered_json::array();
        for (Eigen::Index i = 0; i < mat.rows(); ++i)
          for (Eigen::Index j = 0; j < mat.cols(); ++j) data.push_back(mat(i, j));
        t["data"] = std::move(data);
        out[name] = std::move(t);
      }
      return out;
    };
    doc["tensors"] = dump_tensors(tensors);
    if (!upstream_tensors.empty()) doc["upstream_tensors"] = dump_tensors(upstream_tensors);
    std::ofstream out(path);
    if (!out) throw DataError("checkpoint: cannot write '" + path + "'");
    out << doc.dump() << "\n";
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("checkpoint: cannot open '" + path + "'");
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("checkpoint '" + path + "': malformed JSON: " + std::string(e.what()));
    }
    if (doc.value("kind", "") != "rolelab-checkpoint")
      throw DataError("checkpoint '" + path + "': not a rolelab checkpoint");
    if (doc.value("format_version", -1) != kFormatVersion)
      throw DataError("checkpoint '" + path + "': unsupported format version");
    Checkpoint ckpt;
    for (const auto& [k, v] : doc.at("config").items()) ckpt.config[k] = v.get<std::string>();
    ckpt.seed = doc.at("seed").get<uint64_t>();
    ckpt.epoch = doc.at("epoch").get<int>();
    ckpt.best_dev_loss = doc.at("best_dev_loss").get<double>();
    auto read_tensors = [&](const nlohmann::json& obj) {
      std::map<std::string, Mat> out;
      for (const auto& [name, t] : obj.items()) {
        Eigen::Index rows = t.at("rows").get<Eigen::Index>();
        Eigen::Index cols = t.at("cols").get<Eigen::Index>();
        const auto& data = t.at("data");
        if (static_cast<Eigen::Index>(data.size()) != rows * cols)
          throw DataError("checkpoint '" + path + "': tensor '" + name + "' data size mismatch");
        Mat mat(rows, cols);
        size_t k = 0;
        for (Eigen::Index i = 0; i < rows; ++i)
          for (Eigen::Index j = 0; j < cols; ++j) mat(i, j) = data[k++].get<double>();
        out[name] = std::move(mat);
      }
      return out;
    };
    ckpt.tensors = read_tensors(doc.at("tensors"));
    if (doc.contains("upstream_tensors")) ckpt.upstream_tensors = read_tensors(doc.at("upstream_tensors"));
    return ckpt;
  }
};

// Warm start: copy the encoder and the selected tagger heads from a source
// snapshot; everything else keeps its fresh initialization, and copied
// weights remain trainable.
inline void transfer_init(ad::ParameterSet& target, const std::map<std::string, Mat>& source,
                          TransferMode mode) {
  if (mode == TransferMode::none) return;
  auto selected = [&](const std::string& name) {
    if (name.rfind("encoder.", 0) == 0) return true;
    if (name.rfind("span_tagger.", 0) == 0) return true;
    if (mode == TransferMode::span_and_head_weights && name.rfind("head_tagger.", 0) == 0) return true;
    return false;
  };
  for (auto& t : target) {
    if (!selected(t->name)) continue;
    auto it = source.find(t->name);
    if (it == source.end()) throw TransferError("transfer: source checkpoint lacks tensor '" + t->name + "'");
    if (it->second.rows() != t->rows() || it->second.cols() != t->cols())
      throw TransferError("transfer: tensor '" + t->name + "' has incompatible shape");
    t->value = it->second;
  }
}

}  // namespace rolelab
