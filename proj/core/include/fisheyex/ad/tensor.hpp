#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <string>
#include <string_view>
#include <vector>

namespace fisheyex::ad {

/// Up to four dimensions, laid out (batch, channels, height, width). Lower
/// ranks keep trailing dims at 1: a matrix is {rows, cols, 1, 1}.
struct Shape {
  std::array<int, 4> dims{1, 1, 1, 1};
  int rank = 4;

  static Shape nchw(int n, int c, int h, int w) { return {{n, c, h, w}, 4}; }
  static Shape matrix(int rows, int cols) { return {{rows, cols, 1, 1}, 2}; }
  static Shape vector(int n) { return {{n, 1, 1, 1}, 1}; }
  static Shape scalar() { return {{1, 1, 1, 1}, 0}; }

  int n() const { return dims[0]; }
  int c() const { return dims[1]; }
  int h() const { return dims[2]; }
  int w() const { return dims[3]; }
  std::size_t plane() const { return static_cast<std::size_t>(dims[2]) * dims[3]; }
  std::size_t item_size() const { return numel() / static_cast<std::size_t>(dims[0]); }
  std::size_t numel() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2] * dims[3];
  }
  std::string to_string() const;

  bool operator==(const Shape&) const = default;
};

template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> data;
  /// Empty until a backward pass reaches this tensor.
  std::vector<T> grad;
  bool requires_grad = true;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0)) : shape(s), data(s.numel(), fill) {}
  Tensor(Shape s, std::vector<T> values);

  std::size_t numel() const { return data.size(); }
  void zero_grad() { grad.clear(); }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    out.grad.assign(grad.begin(), grad.end());
    out.requires_grad = requires_grad;
    return out;
  }
};

/// Named parameters in registration order. References returned by at()
/// stay valid while the store is alive.
template <typename T>
class ParamStore {
 public:
  /// Registers a new zero tensor. Throws invalid_argument on a duplicate name.
  std::size_t add(std::string name, Shape shape);

  std::size_t size() const { return tensors_.size(); }
  bool contains(std::string_view name) const;
  std::size_t index_of(std::string_view name) const;

  Tensor<T>& at(std::size_t i) { return tensors_.at(i); }
  const Tensor<T>& at(std::size_t i) const { return tensors_.at(i); }
  Tensor<T>& at(std::string_view name) { return tensors_[index_of(name)]; }
  const Tensor<T>& at(std::string_view name) const { return tensors_[index_of(name)]; }
  const std::string& name(std::size_t i) const { return names_.at(i); }

  std::size_t parameter_count() const;
  void zero_grad();
  void set_requires_grad(bool flag);

  template <typename U>
  ParamStore<U> cast() const {
    ParamStore<U> out;
    for (std::size_t i = 0; i < tensors_.size(); ++i) {
      out.add(names_[i], tensors_[i].shape);
      out.at(i) = tensors_[i].template cast<U>();
    }
    return out;
  }

 private:
  std::vector<std::string> names_;
  std::deque<Tensor<T>> tensors_;
};

}  // namespace fisheyex::ad
