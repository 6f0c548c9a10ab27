#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rolelab/common.hpp"

namespace rolelab::ad {

// A named trainable tensor. Vectors are stored as n x 1 matrices. Gradients
// accumulate across backward passes until zero_grads() is called.
struct Tensor {
  std::string name;
  Mat value;
  Mat grad;
  Mat adam_m, adam_v;  // optimizer state, sized on first update

  Tensor(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)) {}

  Eigen::Index rows() const { return value.rows(); }
  Eigen::Index cols() const { return value.cols(); }
  Eigen::Index size() const { return value.size(); }
};

// Ordered registry of tensors; registration order is the canonical parameter
// order (used for seeded init and reproducible optimizer sweeps).
class ParameterSet {
 public:
  Tensor& add(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    if (index_.count(name)) throw Error("duplicate parameter tensor '" + name + "'");
    items_.push_back(std::make_unique<Tensor>(name, rows, cols));
    index_[name] = items_.size() - 1;
    return *items_.back();
  }

  Tensor* find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : items_[it->second].get();
  }
  const Tensor* find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : items_[it->second].get();
  }

  Tensor& at(const std::string& name) {
    Tensor* t = find(name);
    if (!t) throw Error("unknown parameter tensor '" + name + "'");
    return *t;
  }
  const Tensor& at(const std::string& name) const {
    const Tensor* t = find(name);
    if (!t) throw Error("unknown parameter tensor '" + name + "'");
    return *t;
  }

  size_t count() const { return items_.size(); }

  long total_parameters() const {
    long n = 0;
    for (const auto& t : items_) n += static_cast<long>(t->size());
    return n;
  }

  void zero_grads() {
    for (auto& t : items_) t->grad.setZero();
  }

  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::vector<std::unique_ptr<Tensor>> items_;
  std::map<std::string, size_t> index_;
};

// Seeded uniform fan-in initialization: W ~ U(-1/sqrt(cols), 1/sqrt(cols)),
// biases (single-column tensors named *.b*) zero. Tensors are visited in
// registration order, so a seed fully determines the parameter values.
inline void init_uniform_fan_in(ParameterSet& params, Rng& rng) {
  for (auto& t : params) {
    if (t->cols() == 1 && t->name.find(".b") != std::string::npos) {
      t->value.setZero();
      continue;
    }
    double bound = 1.0 / std::sqrt(static_cast<double>(t->cols()));
    for (Eigen::Index i = 0; i < t->rows(); ++i)
      for (Eigen::Index j = 0; j < t->cols(); ++j) t->value(i, j) = rng.uniform(-bound, bound);
  }
}

using NodeId = int;

// Dynamic reverse-mode tape over vector-valued nodes. A fresh tape is built
// per batch; backward() runs one reverse sweep accumulating into node grads
// and tensor grads.
class Tape {
 public:
  NodeId constant(Vec v) { return push(std::move(v), nullptr); }

  NodeId zeros(Eigen::Index n) { return constant(Vec::Zero(n)); }

  // W*x + b
  NodeId affine(Tensor& W, Tensor& b, NodeId x) {
    check_cols(W, node(x).value.size());
    if (b.size() != W.rows()) throw ShapeError("affine: bias size mismatch for '" + b.name + "'");
    Vec out = W.value * node(x).value + b.value.col(0);
    Tensor* Wp = &W;
    Tensor* bp = &b;
    return push(std::move(out), [Wp, bp, x](Tape& t, const Vec& g, const Vec&) {
      Wp->grad.noalias() += g * t.node(x).value.transpose();
      bp->grad.col(0) += g;
      t.node(x).grad.noalias() += Wp->value.transpose() * g;
    });
  }

  // W*x (no bias)
  NodeId matvec(Tensor& W, NodeId x) {
    check_cols(W, node(x).value.size());
    Vec out = W.value * node(x).value;
    Tensor* Wp = &W;
    return push(std::move(out), [Wp, x](Tape& t, const Vec& g, const Vec&) {
      Wp->grad.noalias() += g * t.node(x).value.transpose();
      t.node(x).grad.noalias() += Wp->value.transpose() * g;
    });
  }

  NodeId add(NodeId a, NodeId b) {
    check_same(a, b, "add");
    return push(node(a).value + node(b).value, [a, b](Tape& t, const Vec& g, const Vec&) {
      t.node(a).grad += g;
      t.node(b).grad += g;
    });
  }

  NodeId sub(NodeId a, NodeId b) {
    check_same(a, b, "sub");
    return push(node(a).value - node(b).value, [a, b](Tape& t, const Vec& g, const Vec&) {
      t.node(a).grad += g;
      t.node(b).grad -= g;
    });
  }

  NodeId cmul(NodeId a, NodeId b) {
    check_same(a, b, "cmul");
    return push(node(a).value.cwiseProduct(node(b).value), [a, b](Tape& t, const Vec& g, const Vec&) {
      t.node(a).grad += g.cwiseProduct(t.node(b).value);
      t.node(b).grad += g.cwiseProduct(t.node(a).value);
    });
  }

  NodeId scale(NodeId a, double c) {
    return push(node(a).value * c, [a, c](Tape& t, const Vec& g, const Vec&) { t.node(a).grad += g * c; });
  }

  NodeId sigmoid(NodeId x) {
    Vec out = node(x).value.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
    return push(std::move(out), [x](Tape& t, const Vec& g, const Vec& y) {
      t.node(x).grad += g.cwiseProduct(y.cwiseProduct(Vec::Ones(y.size()) - y));
    });
  }

  NodeId tanh_fn(NodeId x) {
    Vec out = node(x).value.array().tanh();
    return push(std::move(out), [x](Tape& t, const Vec& g, const Vec& y) {
      t.node(x).grad += g.cwiseProduct(Vec::Ones(y.size()) - y.cwiseProduct(y));
    });
  }

  NodeId relu(NodeId x) {
    Vec out = node(x).value.cwiseMax(0.0);
    return push(std::move(out), [x](Tape& t, const Vec& g, const Vec& y) {
      for (Eigen::Index i = 0; i < y.size(); ++i)
        if (y[i] > 0.0) t.node(x).grad[i] += g[i];
    });
  }

  NodeId concat(std::span<const NodeId> parts) {
    Eigen::Index total = 0;
    for (NodeId p : parts) total += node(p).value.size();
    Vec out(total);
    Eigen::Index at = 0;
    for (NodeId p : parts) {
      out.segment(at, node(p).value.size()) = node(p).value;
      at += node(p).value.size();
    }
    std::vector<NodeId> ps(parts.begin(), parts.end());
    return push(std::move(out), [ps](Tape& t, const Vec& g, const Vec&) {
      Eigen::Index at = 0;
      for (NodeId p : ps) {
        t.node(p).grad += g.segment(at, t.node(p).value.size());
        at += t.node(p).value.size();
      }
    });
  }

  NodeId concat(std::initializer_list<NodeId> parts) { return concat(std::span<const NodeId>(parts.begin(), parts.size())); }

  // Full softmax with exact Jacobian backward; used when a distribution is
  // passed downstream as a differentiable feature.
  NodeId softmax(NodeId x) {
    Vec p = stable_softmax(node(x).value);
    return push(std::move(p), [x](Tape& t, const Vec& g, const Vec& p) {
      double dot = g.dot(p);
      t.node(x).grad += p.cwiseProduct(g - Vec::Constant(g.size(), dot));
    });
  }

  // Scalar cross-entropy of softmax(logits) against a target index.
  NodeId softmax_cross_entropy(NodeId logits, int target) {
    const Vec& l = node(logits).value;
    if (target < 0 || target >= l.size()) throw ShapeError("softmax_cross_entropy: target out of range");
    double m = l.maxCoeff();
    double lse = m + std::log((l.array() - m).exp().sum());
    Vec out(1);
    out[0] = lse - l[target];
    Vec p = stable_softmax(l);
    return push(std::move(out), [logits, target, p](Tape& t, const Vec& g, const Vec&) {
      Vec d = p;
      d[target] -= 1.0;
      t.node(logits).grad += g[0] * d;
    });
  }

  // Weighted sum of scalar nodes -> scalar node.
  NodeId weighted_sum(std::span<const std::pair<NodeId, double>> terms) {
    double total = 0.0;
    for (const auto& [id, w] : terms) {
      if (node(id).value.size() != 1) throw ShapeError("weighted_sum: operand is not scalar");
      total += w * node(id).value[0];
    }
    Vec out(1);
    out[0] = total;
    std::vector<std::pair<NodeId, double>> ts(terms.begin(), terms.end());
    return push(std::move(out), [ts](Tape& t, const Vec& g, const Vec&) {
      for (const auto& [id, w] : ts) t.node(id).grad[0] += g[0] * w;
    });
  }

  NodeId mean_of(const std::vector<NodeId>& scalars) {
    if (scalars.empty()) throw ShapeError("mean_of: no operands");
    std::vector<std::pair<NodeId, double>> terms;
    terms.reserve(scalars.size());
    double w = 1.0 / static_cast<double>(scalars.size());
    for (NodeId id : scalars) terms.emplace_back(id, w);
    return weighted_sum(terms);
  }

  const Vec& value(NodeId id) const { return nodes_[static_cast<size_t>(id)].value; }
  double scalar(NodeId id) const {
    const Vec& v = value(id);
    if (v.size() != 1) throw ShapeError("scalar(): node is not scalar");
    return v[0];
  }

  void backward(NodeId root) {
    if (node(root).value.size() != 1) throw ShapeError("backward: root must be scalar");
    for (auto& n : nodes_) n.grad.setZero();
    node(root).grad[0] = 1.0;
    for (size_t i = nodes_.size(); i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.backward || n.grad.isZero(0.0)) continue;
      n.backward(*this, n.grad, n.value);
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  friend struct NodeRef;
  using BackwardFn = std::function<void(Tape&, const Vec& grad, const Vec& value)>;

  struct Node {
    Vec value;
    Vec grad;
    BackwardFn backward;
  };

  Node& node(NodeId id) { return nodes_[static_cast<size_t>(id)]; }
  const Node& node(NodeId id) const { return nodes_[static_cast<size_t>(id)]; }

  NodeId push(Vec value, BackwardFn fn) {
    Node n;
    n.grad = Vec::Zero(value.size());
    n.value = std::move(value);
    n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size() - 1);
  }

  static Vec stable_softmax(const Vec& l) {
    double m = l.maxCoeff();
    Vec e = (l.array() - m).exp();
    return e / e.sum();
  }

  void check_cols(const Tensor& W, Eigen::Index n) const {
    if (W.cols() != n)
      throw ShapeError("matrix '" + W.name + "' expects input of size " + std::to_string(W.cols()) + ", got " +
                       std::to_string(n));
  }
  void check_same(NodeId a, NodeId b, const char* op) const {
    if (node(a).value.size() != node(b).value.size()) throw ShapeError(std::string(op) + ": operand size mismatch");
  }

  std::vector<Node> nodes_;
};

// Softmax over a plain vector, for inference-side probability readout.
inline Vec softmax(const Vec& logits) {
  double m = logits.maxCoeff();
  Vec e = (logits.array() - m).exp();
  return e / e.sum();
}

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with optional global-norm gradient clipping. step() consumes and
// zeroes the accumulated gradients.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Returns the pre-clip global gradient norm.
  double step(ParameterSet& params, double clip_norm = 0.0) {
    double sq = 0.0;
    for (auto& t : params) sq += t->grad.squaredNorm();
    double norm = std::sqrt(sq);
    double scale = 1.0;
    if (clip_norm > 0.0 && norm > clip_norm) scale = clip_norm / norm;
    ++steps_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(steps_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(steps_));
    for (auto& t : params) {
      if (t->adam_m.size() == 0) {
        t->adam_m = Mat::Zero(t->rows(), t->cols());
        t->adam_v = Mat::Zero(t->rows(), t->cols());
      }
      Mat g = t->grad * scale;
      t->adam_m = cfg_.beta1 * t->adam_m + (1.0 - cfg_.beta1) * g;
      t->adam_v = cfg_.beta2 * t->adam_v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
      Mat m_hat = t->adam_m / bc1;
      Mat v_hat = t->adam_v / bc2;
      t->value -= cfg_.learning_rate *
                  m_hat.cwiseQuotient(v_hat.cwiseSqrt() + Mat::Constant(t->rows(), t->cols(), cfg_.epsilon));
      t->grad.setZero();
    }
    return norm;
  }

  long steps() const { return steps_; }

 private:
  AdamConfig cfg_;
  long steps_ = 0;
};

}  // namespace rolelab::ad
