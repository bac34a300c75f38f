#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <utility>
#include <vector>

#include "uec/error.hpp"
#include "uec/tensor.hpp"

namespace uec {

// Handle to a value recorded on a tape. Only meaningful for the tape that
// produced it.
struct Var {
  std::size_t id = 0;
};

// Reverse-mode tape. Every op appends one node; backward() walks the nodes in
// exact reverse order and each node's closure adds its contribution into the
// gradients of its inputs (so tensors consumed twice receive the sum).
template <typename T>
class BasicTape {
 public:
  using value_type = T;
  using TensorT = BasicTensor<T>;
  // Called with the gradient flowing into the node's output.
  using BackwardFn = std::function<void(BasicTape&, std::span<const T>)>;

  Var constant(TensorT value) { return push(std::move(value), false, {}); }

  Var parameter(TensorT value) { return push(std::move(value), true, {}); }

  // Records an op output. The node requires grad iff any input does; the
  // closure is dropped otherwise.
  Var record(TensorT value, std::initializer_list<Var> inputs, BackwardFn fn) {
    bool needs = false;
    for (Var v : inputs) needs = needs || nodes_.at(v.id).requires_grad;
    return push(std::move(value), needs, needs ? std::move(fn) : BackwardFn{});
  }

  Var record(TensorT value, std::span<const Var> inputs, BackwardFn fn) {
    bool needs = false;
    for (Var v : inputs) needs = needs || nodes_.at(v.id).requires_grad;
    return push(std::move(value), needs, needs ? std::move(fn) : BackwardFn{});
  }

  const TensorT& value(Var v) const { return nodes_.at(v.id).value; }
  const Shape& shape(Var v) const { return nodes_.at(v.id).value.shape; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  // Empty span when no gradient reached this node.
  std::span<const T> grad(Var v) const { return nodes_.at(v.id).grad; }

  std::span<T> grad_mut(Var v) {
    Node& n = nodes_.at(v.id);
    if (n.grad.empty()) n.grad.assign(n.value.size(), T{0});
    return n.grad;
  }

  // Gradient of the last backward() w.r.t. `v`, zero-filled if unreachable.
  TensorT gradient(Var v) const {
    const Node& n = nodes_.at(v.id);
    TensorT g(n.value.shape);
    if (!n.grad.empty()) g.data = n.grad;
    return g;
  }

  void backward(Var loss) {
    Node& root = nodes_.at(loss.id);
    if (root.value.size() != 1) {
      throw Error(ErrorKind::kShape, "loss",
                  "backward requires a scalar, got shape " +
                      to_string(root.value.shape));
    }
    for (Node& n : nodes_) n.grad.clear();
    grad_mut(loss)[0] = T{1};
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (!n.backward || n.grad.empty()) continue;
      // The closure may allocate input grads (other nodes) but never this one.
      const std::vector<T>& g = n.grad;
      n.backward(*this, std::span<const T>(g));
    }
  }

  std::size_t size() const noexcept { return nodes_.size(); }

  // Non-smooth ops (relu, clip, max) fold their active branch into a running
  // signature when tracking is on. Two forward passes with equal signatures
  // took the same branches everywhere.
  void set_track_kinks(bool on) { track_kinks_ = on; }
  bool track_kinks() const noexcept { return track_kinks_; }
  void note_kink(std::uint64_t code) {
    kink_signature_ ^= code + 0x9e3779b97f4a7c15ULL + (kink_signature_ << 6) +
                       (kink_signature_ >> 2);
  }
  std::uint64_t kink_signature() const noexcept { return kink_signature_; }

 private:
  struct Node {
    TensorT value;
    std::vector<T> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Var push(TensorT value, bool requires_grad, BackwardFn fn) {
    value.requires_grad = requires_grad;
    nodes_.push_back(Node{std::move(value), {}, requires_grad, std::move(fn)});
    return Var{nodes_.size() - 1};
  }

  std::deque<Node> nodes_;  // stable references across push_back
  bool track_kinks_ = false;
  std::uint64_t kink_signature_ = 0;
};

using Tape = BasicTape<float>;

}  // namespace uec
