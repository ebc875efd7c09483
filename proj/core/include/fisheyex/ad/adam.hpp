#pragma once

#include <vector>

#include "fisheyex/ad/tensor.hpp"

namespace fisheyex::ad {

template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  long step = 0;
  double lr = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double eps = 1e-8;
};

template <typename T>
AdamState<T> make_adam(const ParamStore<T>& params, double lr, double beta1 = 0.5,
                       double beta2 = 0.9);

/// Bias-corrected Adam over every parameter with requires_grad; clears
/// gradients afterwards. Throws invalid_argument if a trainable parameter has
/// no gradient.
template <typename T>
void adam_step(ParamStore<T>& params, AdamState<T>& state);

/// Clamps every value of every parameter into [-bound, bound].
template <typename T>
void clip_weights(ParamStore<T>& params, double bound);

}  // namespace fisheyex::ad
