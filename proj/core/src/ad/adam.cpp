#include "fisheyex/ad/adam.hpp"

#include <algorithm>
#include <cmath>

#include "fisheyex/error.hpp"

namespace fisheyex::ad {

template <typename T>
AdamState<T> make_adam(const ParamStore<T>& params, double lr, double beta1, double beta2) {
  AdamState<T> state;
  state.lr = lr;
  state.beta1 = beta1;
  state.beta2 = beta2;
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m.emplace_back(params.at(i).numel(), T(0));
    state.v.emplace_back(params.at(i).numel(), T(0));
  }
  return state;
}

template <typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& state) {
  if (state.m.size() != params.size()) fail(ErrorCode::invalid_argument, "optimizer state does not match parameters");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = params.at(i);
    if (!p.requires_grad) continue;
    if (p.grad.size() != p.data.size()) {
      fail(ErrorCode::invalid_argument, "parameter " + params.name(i) + " has no gradient");
    }
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t k = 0; k < p.data.size(); ++k) {
      const double gk = p.grad[k];
      const double mk = state.beta1 * m[k] + (1.0 - state.beta1) * gk;
      const double vk = state.beta2 * v[k] + (1.0 - state.beta2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      const double update = state.lr * (mk / c1) / (std::sqrt(vk / c2) + state.eps);
      p.data[k] = static_cast<T>(p.data[k] - update);
    }
    p.zero_grad();
  }
}

template <typename T>
void clip_weights(ParamStore<T>& params, double bound) {
  const T b = static_cast<T>(bound);
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (T& x : params.at(i).data) x = std::clamp(x, -b, b);
  }
}

template AdamState<float> make_adam(const ParamStore<float>&, double, double, double);
template AdamState<double> make_adam(const ParamStore<double>&, double, double, double);
template void adam_step(ParamStore<float>&, AdamState<float>&);
template void adam_step(ParamStore<double>&, AdamState<double>&);
template void clip_weights(ParamStore<float>&, double);
template void clip_weights(ParamStore<double>&, double);

}  // namespace fisheyex::ad
