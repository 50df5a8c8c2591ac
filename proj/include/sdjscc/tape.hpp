#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sdjscc/tensor.hpp"

namespace sdjscc {

// Handle to a value recorded on a Tape.
struct Var {
  std::uint32_t id = std::numeric_limits<std::uint32_t>::max();
  bool valid() const { return id != std::numeric_limits<std::uint32_t>::max(); }
};

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> tensor;
  bool frozen = false;
};

// Reverse-mode tape. Operations append nodes in execution order, so the node
// vector is already a topological order and backward is a single reverse
// sweep. Recorded values are never mutated.
template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape&, Var)>;

  // Value that never receives a gradient.
  Var constant(Tensor<T> value) { return push(std::move(value), {}, nullptr, false, nullptr); }

  // Input whose gradient is retained on the tape (readable through grad()).
  Var leaf(Tensor<T> value) { return push(std::move(value), {}, nullptr, grad_enabled_, nullptr); }

  // Frozen parameters, and all parameters while gradients are disabled, are
  // recorded as constants.
  Var param(Parameter<T>& p) {
    const bool live = grad_enabled_ && !p.frozen;
    Tensor<T> v(p.tensor.shape, p.tensor.data);
    return push(std::move(v), {}, nullptr, live, live ? &p : nullptr);
  }

  Var record(std::string_view op, Tensor<T> value, std::initializer_list<Var> inputs,
             Backward backward) {
    value.check_finite(op);
    bool needs = false;
    if (grad_enabled_) {
      for (Var in : inputs) needs = needs || node(in).requires_grad;
    }
    return push(std::move(value), inputs, needs ? std::move(backward) : nullptr, needs, nullptr);
  }

  const Tensor<T>& value(Var v) const { return node(v).value; }
  const Shape& shape(Var v) const { return node(v).value.shape; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  bool has_grad(Var v) const { return !node(v).grad.empty(); }

  std::span<const T> grad(Var v) const {
    const Node& n = node(v);
    if (!n.requires_grad) throw ContractError("gradient unavailable: value is detached from the tape");
    if (n.grad.empty()) throw ContractError("gradient unavailable: value not reached by backward");
    return n.grad;
  }

  // Gradient buffer for backward rules; zero-initialised on first access.
  std::span<T> grad_mut(Var v) {
    Node& n = node(v);
    if (n.grad.empty()) n.grad.assign(n.value.size(), T{0});
    return n.grad;
  }

  void backward(Var loss) {
    if (nodes_.empty()) throw ContractError("backward on an empty tape");
    if (value(loss).size() != 1) {
      throw ContractError("backward needs a scalar loss, got shape " + shape_string(shape(loss)));
    }
    const T one[1] = {T{1}};
    backward(loss, one);
  }

  // Seeds d(output) with `seed` and propagates to every reachable node. Node
  // gradients from a previous call are discarded; parameter gradients
  // accumulate across calls.
  void backward(Var output, std::span<const T> seed) {
    if (nodes_.empty()) throw ContractError("backward on an empty tape");
    Node& out = node(output);
    if (seed.size() != out.value.size()) {
      throw DimensionError("backward seed has " + std::to_string(seed.size()) + " values, output has " +
                           std::to_string(out.value.size()));
    }
    if (!out.requires_grad) throw ContractError("backward from a value that does not require grad");
    for (Node& n : nodes_) n.grad.clear();
    out.grad.assign(seed.begin(), seed.end());
    for (std::uint32_t i = output.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.empty() || !n.backward) continue;
      n.backward(*this, Var{i});
    }
    for (Node& n : nodes_) {
      if (n.param == nullptr || n.grad.empty()) continue;
      std::vector<T>& g = n.param->tensor.ensure_grad();
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += n.grad[j];
    }
  }

  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }
  bool grad_enabled() const { return grad_enabled_; }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Tensor<T> value;
    std::vector<Var> inputs;
    Backward backward;
    std::vector<T> grad;
    bool requires_grad = false;
    Parameter<T>* param = nullptr;
  };

  Var push(Tensor<T> value, std::initializer_list<Var> inputs, Backward backward, bool requires_grad,
           Parameter<T>* param) {
    for (Var in : inputs) {
      if (!in.valid() || in.id >= nodes_.size()) throw ContractError("operation input is not on this tape");
    }
    value.grad.reset();
    value.requires_grad = requires_grad;
    nodes_.push_back(Node{std::move(value), std::vector<Var>(inputs), std::move(backward), {},
                          requires_grad, param});
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
  }

  Node& node(Var v) {
    if (!v.valid() || v.id >= nodes_.size()) throw ContractError("variable is not on this tape");
    return nodes_[v.id];
  }
  const Node& node(Var v) const {
    if (!v.valid() || v.id >= nodes_.size()) throw ContractError("variable is not on this tape");
    return nodes_[v.id];
  }

  std::vector<Node> nodes_;
  bool grad_enabled_ = true;
};

}  // namespace sdjscc
