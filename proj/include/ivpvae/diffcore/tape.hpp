#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <vector>

#include "ivpvae/diffcore/param_store.hpp"
#include "ivpvae/diffcore/tensor.hpp"

namespace ivpvae::diff {

class Tape;

namespace detail {

struct Node {
  Tensor value;
  std::vector<double> grad;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;
  Tape* tape = nullptr;
  std::ptrdiff_t param = -1;
  bool requires_grad = false;

  std::vector<double>& grad_buffer() {
    if (grad.empty()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

/// Gradient buffer of input `i`, or nullptr when that input needs none.
inline double* input_grad(Node& self, std::size_t i) {
  Node& in = *self.inputs[i];
  return in.requires_grad ? in.grad_buffer().data() : nullptr;
}

}  // namespace detail

/// Handle to a value in a computation. Values that do not depend on any
/// gradient-requiring leaf are plain constants and are never recorded.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  std::size_t size() const { return node_->value.size(); }
  double item() const { return node_->value.item(); }
  bool requires_grad() const { return node_->requires_grad; }
  Tape* tape() const { return node_->tape; }

  /// Accumulated gradient after Tape::backward; empty if none reached it.
  std::span<const double> grad() const { return node_->grad; }

  detail::Node* node() const { return node_.get(); }
  const std::shared_ptr<detail::Node>& ptr() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

inline Var constant(Tensor value) {
  auto n = std::make_shared<detail::Node>();
  n->value = std::move(value);
  return Var(std::move(n));
}

/// Dynamic reverse-mode tape. Nodes are recorded in creation order, which is
/// a topological order; backward walks it in reverse.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(Tensor value, std::ptrdiff_t param = -1) {
    auto n = std::make_shared<detail::Node>();
    n->value = std::move(value);
    n->requires_grad = true;
    n->tape = this;
    n->param = param;
    nodes_.push_back(n);
    return Var(std::move(n));
  }

  void record(std::shared_ptr<detail::Node> node) { nodes_.push_back(std::move(node)); }

  std::size_t size() const { return nodes_.size(); }

  void clear() { nodes_.clear(); }

  /// Reverse accumulation from a scalar. Gradients of parameter leaves are
  /// added into `store` when given.
  void backward(const Var& loss, ParamStore* store = nullptr) {
    if (!loss.defined() || loss.size() != 1) {
      throw ContractError("backward requires a scalar loss, got shape " +
                          (loss.defined() ? to_string(loss.shape()) : std::string("<undefined>")));
    }
    if (!loss.requires_grad()) throw ContractError("loss does not depend on any gradient-requiring value");
    if (loss.tape() != this) throw ContractError("loss was recorded on a different tape");
    for (auto& n : nodes_) n->grad.clear();
    loss.node()->grad_buffer()[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      detail::Node& n = **it;
      if (n.grad.empty() || !n.backward) continue;
      n.backward(n);
    }
    if (store == nullptr) return;
    for (auto& n : nodes_) {
      if (n->param < 0 || n->grad.empty()) continue;
      auto g = store->grad(static_cast<std::size_t>(n->param)).data();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += n->grad[i];
    }
  }

 private:
  std::vector<std::shared_ptr<detail::Node>> nodes_;
};

namespace detail {

template <class Inputs>
Var make_node(Tensor value, const Inputs& inputs, std::function<void(Node&)> backward) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  Tape* tape = nullptr;
  for (const Var& v : inputs) {
    if (!v.requires_grad()) continue;
    if (tape != nullptr && v.tape() != tape) throw ContractError("operands recorded on different tapes");
    tape = v.tape();
  }
  if (tape != nullptr) {
    n->requires_grad = true;
    n->tape = tape;
    n->inputs.reserve(inputs.size());
    for (const Var& v : inputs) n->inputs.push_back(v.ptr());
    n->backward = std::move(backward);
    tape->record(n);
  }
  return Var(std::move(n));
}

inline Var make_node(Tensor value, std::initializer_list<Var> inputs, std::function<void(Node&)> backward) {
  return make_node<std::initializer_list<Var>>(std::move(value), inputs, std::move(backward));
}

}  // namespace detail

/// Read access to a ParamStore for one forward pass. With a tape, each
/// parameter becomes a gradient-requiring leaf (created once and cached);
/// without one, parameters are constants and nothing is recorded.
class Bindings {
 public:
  Bindings(const ParamStore& store, Tape* tape) : store_(&store), tape_(tape), cache_(store.size()) {}

  Var operator()(std::size_t index) {
    Var& slot = cache_.at(index);
    if (!slot.defined()) {
      slot = tape_ ? tape_->leaf(store_->value(index), static_cast<std::ptrdiff_t>(index))
                   : constant(store_->value(index));
    }
    return slot;
  }

  Tape* tape() const { return tape_; }
  const ParamStore& store() const { return *store_; }

 private:
  const ParamStore* store_;
  Tape* tape_;
  std::vector<Var> cache_;
};

}  // namespace ivpvae::diff
