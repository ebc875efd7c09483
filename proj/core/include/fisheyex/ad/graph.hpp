#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fisheyex/ad/tensor.hpp"

namespace fisheyex::ad {

/// Handle to a node of a Graph.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape. Nodes are appended in evaluation order, which is a
/// topological order, so backward() walks the tape once from the end.
/// A graph is single-owner and built once per forward pass.
template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, int self)>;

  Var constant(Shape shape, std::vector<T> values);
  Var constant(const Tensor<T>& tensor) { return constant(tensor.shape, tensor.data); }
  /// Leaf bound to an external tensor; backward() accumulates into its grad
  /// when requires_grad is set.
  Var parameter(Tensor<T>& tensor);

  /// Appends an op result. `fn` runs during backward only if the node needs
  /// a gradient (some input does).
  Var push(Shape shape, std::vector<T> value, std::span<const Var> inputs, BackwardFn fn);

  const Shape& shape(Var v) const { return nodes_[v.id].shape; }
  std::span<const T> value(Var v) const { return nodes_[v.id].value; }
  T item(Var v) const { return nodes_[v.id].value.at(0); }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  /// Gradient buffer of a node, zero-initialized on first access.
  std::vector<T>& grad(Var v);
  std::span<const T> grad_view(Var v) const { return nodes_[v.id].grad; }

  /// Seeds d(root) = 1 and propagates to every reachable node, then adds leaf
  /// gradients into their bound tensors. Root must hold one element.
  void backward(Var root);

  std::size_t node_count() const { return nodes_.size(); }

  /// When enabled, ops with a derivative kink fold the sign pattern of their
  /// inputs into kink_signature(); two evaluations with different signatures
  /// sit on different linear pieces.
  void track_kinks(bool on) { track_kinks_ = on; }
  bool tracking_kinks() const { return track_kinks_; }
  void note_kinks(std::span<const T> pre_activation);
  std::uint64_t kink_signature() const { return kink_signature_; }

 private:
  struct Node {
    Shape shape;
    std::vector<T> value;
    std::vector<T> grad;
    bool needs_grad = false;
    Tensor<T>* param = nullptr;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
  bool track_kinks_ = false;
  std::uint64_t kink_signature_ = 1469598103934665603ULL;
};

}  // namespace fisheyex::ad
