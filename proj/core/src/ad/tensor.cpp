#include "fisheyex/ad/tensor.hpp"

#include <fmt/core.h>

#include "fisheyex/error.hpp"

namespace fisheyex::ad {

std::string Shape::to_string() const {
  std::string out = "(";
  for (int i = 0; i < rank; ++i) out += fmt::format("{}{}", i ? ", " : "", dims[i]);
  return out + ")";
}

template <typename T>
Tensor<T>::Tensor(Shape s, std::vector<T> values) : shape(s), data(std::move(values)) {
  if (data.size() != shape.numel()) {
    fail(ErrorCode::shape_mismatch, "tensor data length does not match shape " + shape.to_string());
  }
}

template <typename T>
std::size_t ParamStore<T>::add(std::string name, Shape shape) {
  if (contains(name)) fail(ErrorCode::invalid_argument, "duplicate parameter name " + name);
  names_.push_back(std::move(name));
  tensors_.emplace_back(shape);
  return tensors_.size() - 1;
}

template <typename T>
bool ParamStore<T>::contains(std::string_view name) const {
  for (const auto& n : names_) {
    if (n == name) return true;
  }
  return false;
}

template <typename T>
std::size_t ParamStore<T>::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  fail(ErrorCode::invalid_argument, "unknown parameter " + std::string(name));
}

template <typename T>
std::size_t ParamStore<T>::parameter_count() const {
  std::size_t total = 0;
  for (const auto& t : tensors_) total += t.numel();
  return total;
}

template <typename T>
void ParamStore<T>::zero_grad() {
  for (auto& t : tensors_) t.zero_grad();
}

template <typename T>
void ParamStore<T>::set_requires_grad(bool flag) {
  for (auto& t : tensors_) t.requires_grad = flag;
}

template struct Tensor<float>;
template struct Tensor<double>;
template class ParamStore<float>;
template class ParamStore<double>;

}  // namespace fisheyex::ad
