#include "fisheyex/ad/graph.hpp"

#include "fisheyex/error.hpp"

namespace fisheyex::ad {

template <typename T>
Var Graph<T>::constant(Shape shape, std::vector<T> values) {
  if (values.size() != shape.numel()) {
    fail(ErrorCode::shape_mismatch, "constant data length does not match shape " + shape.to_string());
  }
  Node node;
  node.shape = shape;
  node.value = std::move(values);
  nodes_.push_back(std::move(node));
  return {static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var Graph<T>::parameter(Tensor<T>& tensor) {
  Node node;
  node.shape = tensor.shape;
  node.value = tensor.data;
  node.needs_grad = tensor.requires_grad;
  node.param = &tensor;
  nodes_.push_back(std::move(node));
  return {static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
Var Graph<T>::push(Shape shape, std::vector<T> value, std::span<const Var> inputs, BackwardFn fn) {
  Node node;
  node.shape = shape;
  node.value = std::move(value);
  for (Var in : inputs) node.needs_grad = node.needs_grad || nodes_[in.id].needs_grad;
  if (node.needs_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return {static_cast<int>(nodes_.size()) - 1};
}

template <typename T>
std::vector<T>& Graph<T>::grad(Var v) {
  Node& node = nodes_[v.id];
  if (node.grad.empty()) node.grad.assign(node.value.size(), T(0));
  return node.grad;
}

template <typename T>
void Graph<T>::backward(Var root) {
  if (nodes_[root.id].value.size() != 1) fail(ErrorCode::shape_mismatch, "backward needs a scalar root");
  grad(root)[0] = T(1);
  for (int id = root.id; id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.needs_grad || node.grad.empty() || !node.backward) continue;
    node.backward(*this, id);
  }
  for (Node& node : nodes_) {
    if (node.param == nullptr || !node.needs_grad || node.grad.empty()) continue;
    auto& target = node.param->grad;
    if (target.empty()) target.assign(node.grad.size(), T(0));
    for (std::size_t i = 0; i < target.size(); ++i) target[i] += node.grad[i];
  }
}

template <typename T>
void Graph<T>::note_kinks(std::span<const T> pre_activation) {
  if (!track_kinks_) return;
  std::uint64_t h = kink_signature_;
  for (T v : pre_activation) {
    h ^= v >= T(0) ? 1u : 0u;
    h *= 1099511628211ULL;
  }
  kink_signature_ = h;
}

template class Graph<float>;
template class Graph<double>;

}  // namespace fisheyex::ad
