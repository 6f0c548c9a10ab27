#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rolelab/autodiff.hpp"

namespace rolelab {

enum class CellKind { lstm_like, gru_like };

inline std::string to_string(CellKind k) { return k == CellKind::lstm_like ? "lstm_like" : "gru_like"; }

inline std::optional<CellKind> cell_kind_from_string(const std::string& s) {
  if (s == "lstm_like") return CellKind::lstm_like;
  if (s == "gru_like") return CellKind::gru_like;
  return std::nullopt;
}

enum class RunMode { train, eval };

struct EncoderConfig {
  CellKind cell_kind = CellKind::lstm_like;
  int input_dim = 0;
  int hidden_dim = 128;  // per direction
  double dropout_rate = 0.25;
  bool use_post_projection = true;  // linear(2H->2H) before the ReLU
  int num_layers = 1;

  int output_dim() const { return 2 * hidden_dim; }

  // The contextual runs use a smaller GRU with no projection after the ReLU.
  static EncoderConfig defaults_for(CellKind kind) {
    EncoderConfig cfg;
    cfg.cell_kind = kind;
    if (kind == CellKind::gru_like) {
      cfg.hidden_dim = 8;
      cfg.use_post_projection = false;
    } else {
      cfg.hidden_dim = 128;
      cfg.use_post_projection = true;
    }
    cfg.dropout_rate = 0.25;
    return cfg;
  }

  void validate() const {
    if (input_dim <= 0) throw ConfigError("encoder: input_dim must be positive");
    if (hidden_dim <= 0) throw ConfigError("encoder: hidden_dim must be positive");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw ConfigError("encoder: dropout_rate must be in [0,1)");
    if (num_layers < 1) throw ConfigError("encoder: num_layers must be >= 1");
  }
};

namespace detail {

inline const char* const kLstmGates[] = {"i", "f", "o", "g"};
inline const char* const kGruGates[] = {"r", "z", "n"};

}  // namespace detail

// Bound view over one direction's cell tensors.
struct CellParams {
  std::vector<ad::Tensor*> W;  // per gate, gate_dim x input_dim
  std::vector<ad::Tensor*> U;  // per gate, gate_dim x hidden_dim
  std::vector<ad::Tensor*> b;  // per gate, gate_dim x 1
};

struct EncoderParams {
  struct Layer {
    CellParams fwd, bwd;
  };
  std::vector<Layer> layers;
  ad::Tensor* proj_W = nullptr;
  ad::Tensor* proj_b = nullptr;
};

inline int gate_count(CellKind kind) { return kind == CellKind::lstm_like ? 4 : 3; }

// Registers all encoder tensors under "encoder." and returns bound views.
// Registration order is canonical: layers, direction fwd then bwd, gates in
// declaration order, then the optional projection.
inline EncoderParams register_encoder(ad::ParameterSet& params, const EncoderConfig& cfg,
                                      const std::string& prefix = "encoder") {
  cfg.validate();
  EncoderParams out;
  int gates = gate_count(cfg.cell_kind);
  const char* const* names = cfg.cell_kind == CellKind::lstm_like ? detail::kLstmGates : detail::kGruGates;
  for (int layer = 0; layer < cfg.num_layers; ++layer) {
    int in_dim = layer == 0 ? cfg.input_dim : cfg.output_dim();
    EncoderParams::Layer bound;
    for (const char* dir : {"fwd", "bwd"}) {
      CellParams cell;
      for (int g = 0; g < gates; ++g) {
        std::string base = prefix + ".l" + std::to_string(layer) + "." + dir + ".";
        cell.W.push_back(&params.add(base + "W" + names[g], cfg.hidden_dim, in_dim));
        cell.U.push_back(&params.add(base + "U" + names[g], cfg.hidden_dim, cfg.hidden_dim));
        cell.b.push_back(&params.add(base + "b" + names[g], cfg.hidden_dim, 1));
      }
      (std::string(dir) == "fwd" ? bound.fwd : bound.bwd) = std::move(cell);
    }
    out.layers.push_back(std::move(bound));
  }
  if (cfg.use_post_projection) {
    out.proj_W = &params.add(prefix + ".proj.W", cfg.output_dim(), cfg.output_dim());
    out.proj_b = &params.add(prefix + ".proj.b", cfg.output_dim(), 1);
  }
  return out;
}

// Fresh reproducible parameter set for a standalone encoder.
inline std::pair<std::unique_ptr<ad::ParameterSet>, EncoderParams> init_parameters(const EncoderConfig& cfg,
                                                                                   uint64_t seed) {
  auto params = std::make_unique<ad::ParameterSet>();
  EncoderParams bound = register_encoder(*params, cfg);
  Rng rng = Rng(seed).fork(0x9e1f);
  ad::init_uniform_fan_in(*params, rng);
  return {std::move(params), bound};
}

namespace detail {

inline ad::NodeId lstm_step(ad::Tape& tape, const CellParams& p, ad::NodeId x, ad::NodeId& h, ad::NodeId& c) {
  ad::NodeId i = tape.sigmoid(tape.add(tape.affine(*p.W[0], *p.b[0], x), tape.matvec(*p.U[0], h)));
  ad::NodeId f = tape.sigmoid(tape.add(tape.affine(*p.W[1], *p.b[1], x), tape.matvec(*p.U[1], h)));
  ad::NodeId o = tape.sigmoid(tape.add(tape.affine(*p.W[2], *p.b[2], x), tape.matvec(*p.U[2], h)));
  ad::NodeId g = tape.tanh_fn(tape.add(tape.affine(*p.W[3], *p.b[3], x), tape.matvec(*p.U[3], h)));
  c = tape.add(tape.cmul(f, c), tape.cmul(i, g));
  h = tape.cmul(o, tape.tanh_fn(c));
  return h;
}

inline ad::NodeId gru_step(ad::Tape& tape, const CellParams& p, ad::NodeId x, ad::NodeId& h) {
  ad::NodeId r = tape.sigmoid(tape.add(tape.affine(*p.W[0], *p.b[0], x), tape.matvec(*p.U[0], h)));
  ad::NodeId z = tape.sigmoid(tape.add(tape.affine(*p.W[1], *p.b[1], x), tape.matvec(*p.U[1], h)));
  ad::NodeId n = tape.tanh_fn(tape.add(tape.affine(*p.W[2], *p.b[2], x), tape.cmul(r, tape.matvec(*p.U[2], h))));
  ad::NodeId ones = tape.constant(Vec::Ones(tape.value(z).size()));
  h = tape.add(tape.cmul(tape.sub(ones, z), n), tape.cmul(z, h));
  return h;
}

inline std::vector<ad::NodeId> run_direction(ad::Tape& tape, const CellParams& p, CellKind kind,
                                             const std::vector<ad::NodeId>& inputs, int hidden_dim, bool reverse) {
  int length = static_cast<int>(inputs.size());
  std::vector<ad::NodeId> states(static_cast<size_t>(length));
  ad::NodeId h = tape.zeros(hidden_dim);
  ad::NodeId c = tape.zeros(hidden_dim);
  for (int step = 0; step < length; ++step) {
    int t = reverse ? length - 1 - step : step;
    ad::NodeId x = inputs[static_cast<size_t>(t)];
    states[static_cast<size_t>(t)] =
        kind == CellKind::lstm_like ? lstm_step(tape, p, x, h, c) : gru_step(tape, p, x, h);
  }
  return states;
}

}  // namespace detail

// Shared bidirectional recurrent encoder: per-token forward++backward hidden
// states, dropout on the recurrent output in train mode, then the rectified
// (optionally projected) activation. Eval mode is deterministic.
inline std::vector<ad::NodeId> encode(ad::Tape& tape, const EncoderParams& bound, const EncoderConfig& cfg,
                                      const std::vector<Vec>& features, RunMode mode, Rng* dropout_rng) {
  if (features.empty()) throw ShapeError("encode: empty feature sequence");
  std::vector<ad::NodeId> inputs;
  inputs.reserve(features.size());
  for (const auto& f : features) {
    if (f.size() != cfg.input_dim)
      throw ShapeError("encode: feature dimension " + std::to_string(f.size()) + " != input_dim " +
                       std::to_string(cfg.input_dim));
    inputs.push_back(tape.constant(f));
  }

  bool apply_dropout = mode == RunMode::train && cfg.dropout_rate > 0.0;
  if (apply_dropout && !dropout_rng) throw ConfigError("encode: train mode with dropout requires an RNG");

  std::vector<ad::NodeId> current = inputs;
  for (const auto& layer : bound.layers) {
    auto fwd = detail::run_direction(tape, layer.fwd, cfg.cell_kind, current, cfg.hidden_dim, false);
    auto bwd = detail::run_direction(tape, layer.bwd, cfg.cell_kind, current, cfg.hidden_dim, true);
    std::vector<ad::NodeId> merged(current.size());
    for (size_t t = 0; t < current.size(); ++t) merged[t] = tape.concat({fwd[t], bwd[t]});
    current = std::move(merged);
  }

  std::vector<ad::NodeId> out(current.size());
  double keep = 1.0 - cfg.dropout_rate;
  for (size_t t = 0; t < current.size(); ++t) {
    ad::NodeId h = current[t];
    if (apply_dropout) {
      Vec mask(cfg.output_dim());
      for (int i = 0; i < cfg.output_dim(); ++i) mask[i] = dropout_rng->bernoulli(keep) ? 1.0 / keep : 0.0;
      h = tape.cmul(h, tape.constant(mask));
    }
    if (bound.proj_W) h = tape.affine(*bound.proj_W, *bound.proj_b, h);
    out[t] = tape.relu(h);
  }
  return out;
}

}  // namespace rolelab
