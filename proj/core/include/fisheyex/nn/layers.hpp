#pragma once

#include <cstdint>
#include <string>

#include "fisheyex/ad/ops.hpp"
#include "fisheyex/rng.hpp"

namespace fisheyex::nn {

/// Init gain for layers followed by a (leaky) ReLU.
inline constexpr double kReluGain = 1.4142135623730951;

/// Parameter indices of a square-kernel convolution inside a ParamStore.
struct ConvLayer {
  std::size_t weight = 0;
  std::size_t bias = 0;
  int kernel = 3;
  int stride = 1;
  int dilation = 1;
  bool wrap_w = false;
};

struct DenseLayer {
  std::size_t weight = 0;
  std::size_t bias = 0;
};

struct NormLayer {
  std::size_t gain = 0;
  std::size_t shift = 0;
};

/// Registers layer parameters in call order. Weights are uniform in
/// +-gain * sqrt(3 / fan_in); each tensor draws from its own stream of the
/// seed so init does not depend on what was registered before it.
class LayerFactory {
 public:
  LayerFactory(ad::ParamStore<float>& store, std::uint64_t seed) : store_(store), seed_(seed) {}

  ConvLayer conv(const std::string& name, int in, int out, int kernel, int stride = 1, int dilation = 1,
                 bool wrap_w = false, double gain = kReluGain);
  /// `zero_weights` starts the layer as a constant `bias_value` map.
  DenseLayer dense(const std::string& name, int in, int out, double gain = 1.0, bool zero_weights = false,
                   float bias_value = 0.0f);
  NormLayer norm(const std::string& name, int channels);

 private:
  void fill_uniform(std::size_t index, double bound);

  ad::ParamStore<float>& store_;
  std::uint64_t seed_;
};

template <typename T>
ad::Var apply(ad::Graph<T>& g, ad::ParamStore<T>& p, const ConvLayer& layer, ad::Var x);
template <typename T>
ad::Var apply(ad::Graph<T>& g, ad::ParamStore<T>& p, const DenseLayer& layer, ad::Var x);
template <typename T>
ad::Var apply(ad::Graph<T>& g, ad::ParamStore<T>& p, const NormLayer& layer, ad::Var x);

template <typename T>
ad::Var lrelu(ad::Graph<T>& g, ad::Var x) {
  return ad::activation(g, ad::Activation::leaky_relu, x);
}

}  // namespace fisheyex::nn
